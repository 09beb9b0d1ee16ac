#include "incrasat/model/types.hpp"

#include <algorithm>

namespace incrasat {

std::optional<Clause> normalizeClause(Clause clause) {
    std::sort(clause.begin(), clause.end(), [](Literal a, Literal b) {
        auto va = variableOf(a), vb = variableOf(b);
        return va != vb ? va < vb : a < b;
    });
    clause.erase(std::unique(clause.begin(), clause.end()), clause.end());
    for (size_t i = 1; i < clause.size(); i++) {
        if (clause[i] == -clause[i - 1]) return std::nullopt;
    }
    return clause;
}

uint32_t RevisionPayload::occurringMaxVar() const {
    uint32_t m = 0;
    for (const auto& c : clauses)
        for (Literal l : c) m = std::max(m, variableOf(l));
    for (Literal l : assumptions) m = std::max(m, variableOf(l));
    return m;
}

void RevisionPayload::validate() const {
    if (maxVar > kMaxVariableCount)
        throw ValidationError("max_var " + std::to_string(maxVar) + " exceeds the variable cap");
    for (const auto& c : clauses) {
        for (Literal l : c) {
            if (l == 0) throw ValidationError("zero literal inside a clause");
            if (variableOf(l) > maxVar)
                throw ValidationError("literal " + std::to_string(l) + " exceeds max_var "
                                      + std::to_string(maxVar));
        }
    }
    for (Literal l : assumptions) {
        if (l == 0) throw ValidationError("zero assumption literal");
        if (variableOf(l) > maxVar)
            throw ValidationError("assumption " + std::to_string(l) + " exceeds max_var "
                                  + std::to_string(maxVar));
    }
}

void RevisionPayload::normalize() {
    std::vector<Clause> out;
    out.reserve(clauses.size());
    for (auto& c : clauses) {
        if (auto n = normalizeClause(std::move(c))) out.push_back(std::move(*n));
    }
    clauses = std::move(out);
}

const char* nameOf(Verdict v) {
    switch (v) {
    case Verdict::SAT: return "SAT";
    case Verdict::UNSAT: return "UNSAT";
    default: return "UNKNOWN";
    }
}

} // namespace incrasat
