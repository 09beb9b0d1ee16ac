#include "incrasat/harness/icnf.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace incrasat::harness {

RevisionPayload IcnfProblem::payload(uint32_t revision) const {
    const auto& inc = increments.at(revision);
    return {revision, inc.clauses, inc.assumptions, maxVar};
}

namespace {

Literal parseLiteral(const std::string& tok, size_t line) {
    int64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) throw IcnfError("expected an integer, got '" + tok + "'", line);
    if (v > kMaxVariableCount || v < -static_cast<int64_t>(kMaxVariableCount))
        throw IcnfError("literal " + tok + " out of range", line);
    return static_cast<Literal>(v);
}

} // namespace

IcnfProblem parseIcnf(std::istream& in) {
    IcnfProblem p;
    IcnfIncrement cur;
    Clause clause;
    bool clauseOpen = false;
    size_t lineNo = 0, clauseLine = 0;
    std::string line;
    auto note = [&](Literal l) { p.maxVar = std::max(p.maxVar, variableOf(l)); };
    auto closeIncrement = [&]() {
        if (clauseOpen) throw IcnfError("clause started here is not terminated by 0", clauseLine);
        p.increments.push_back(std::move(cur));
        cur = {};
    };
    while (std::getline(in, line)) {
        lineNo++;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        std::string body = line.substr(first);
        if (body.rfind("#inc", 0) == 0 && body.find_first_not_of(" \t", 4) == std::string::npos) {
            closeIncrement();
            continue;
        }
        if (body[0] == 'c' || body[0] == '%') continue;
        if (body[0] == 'p') {
            std::istringstream ss(body);
            std::string tag, fmt;
            ss >> tag >> fmt;
            if (tag != "p" || (fmt != "cnf" && fmt != "inccnf")) throw IcnfError("bad problem line", lineNo);
            continue;
        }
        std::istringstream ss(body);
        std::string tok;
        if (body[0] == 'a') {
            ss >> tok;
            if (tok != "a") throw IcnfError("unexpected token '" + tok + "'", lineNo);
            if (clauseOpen) throw IcnfError("assumptions inside an unterminated clause", lineNo);
            bool terminated = false;
            while (ss >> tok) {
                if (terminated) throw IcnfError("tokens after the terminating 0", lineNo);
                Literal l = parseLiteral(tok, lineNo);
                if (l == 0) {
                    terminated = true;
                    continue;
                }
                note(l);
                cur.assumptions.push_back(l);
            }
            if (!terminated) throw IcnfError("assumption line not terminated by 0", lineNo);
            continue;
        }
        while (ss >> tok) {
            Literal l = parseLiteral(tok, lineNo);
            if (!clauseOpen) clauseLine = lineNo;
            clauseOpen = true;
            if (l == 0) {
                cur.clauses.push_back(std::move(clause));
                clause.clear();
                clauseOpen = false;
                } else {
                note(l);
                clause.push_back(l);
            }
        }
    }
    closeIncrement();
    return p;
}

IcnfProblem parseIcnfFile(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    return parseIcnf(in);
}

std::string writeIcnf(const IcnfProblem& problem) {
    std::ostringstream out;
    out << "p inccnf\n";
    for (size_t i = 0; i < problem.increments.size(); i++) {
        if (i > 0) out << "#inc\n";
        for (auto& c : problem.increments[i].clauses) {
            for (auto l : c) out << l << " ";
            out << "0\n";
        }
        if (!problem.increments[i].assumptions.empty()) {
            out << "a ";
            for (auto l : problem.increments[i].assumptions) out << l << " ";
            out << "0\n";
        }
    }
    return out.str();
}

} // namespace incrasat::harness
