#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace incrasat {

// DIMACS / IPASIR convention: variable index with sign as polarity.
using Literal = int32_t;
using Clause = std::vector<Literal>;

constexpr uint32_t kMaxVariableCount = 1u << 28;

inline uint32_t variableOf(Literal lit) {
    return static_cast<uint32_t>(lit < 0 ? -static_cast<int64_t>(lit) : lit);
}

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sorts literals by variable (negative polarity first), removes duplicates and
/// returns nullopt for tautologies. The empty clause normalizes to itself.
std::optional<Clause> normalizeClause(Clause clause);

/// One increment of an incremental job: the clauses and call-scoped
/// assumptions submitted as revision `revision`.
struct RevisionPayload {
    uint32_t revision {0};
    std::vector<Clause> clauses;
    std::vector<Literal> assumptions;
    uint32_t maxVar {0};

    /// Largest variable index occurring in clauses or assumptions.
    uint32_t occurringMaxVar() const;
    /// Throws ValidationError on zero literals inside clauses, zero
    /// assumptions, literals above maxVar or maxVar above the global cap.
    void validate() const;
    /// Normalizes every clause; tautologies are dropped.
    void normalize();

    bool operator==(const RevisionPayload&) const = default;
};

enum class Verdict : uint8_t {
    UNKNOWN = 0,
    SAT = 10,
    UNSAT = 20,
};

const char* nameOf(Verdict v);

struct SolveOutcome {
    Verdict verdict {Verdict::UNKNOWN};
    // One literal per variable 1..maxVar when SAT.
    std::vector<Literal> model;
    // Subset of the call's assumptions when UNSAT.
    std::vector<Literal> failed;
    double wallclockMs {0};

    static SolveOutcome sat(std::vector<Literal> model, double ms = 0) {
        return {Verdict::SAT, std::move(model), {}, ms};
    }
    static SolveOutcome unsat(std::vector<Literal> failed, double ms = 0) {
        return {Verdict::UNSAT, {}, std::move(failed), ms};
    }
    static SolveOutcome unknown(double ms = 0) {
        return {Verdict::UNKNOWN, {}, {}, ms};
    }
};

struct JobId {
    std::string name;
    uint64_t internalId {0};

    bool operator==(const JobId&) const = default;
};

} // namespace incrasat
