#pragma once

#include <filesystem>
#include <istream>
#include <stdexcept>
#include <vector>

#include "incrasat/model/types.hpp"

namespace incrasat::harness {

class IcnfError : public std::runtime_error {
public:
    IcnfError(const std::string& what, size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), _line(line) {}
    size_t line() const { return _line; }

private:
    size_t _line;
};

struct IcnfIncrement {
    std::vector<Clause> clauses;
    std::vector<Literal> assumptions;
};

struct IcnfProblem {
    std::vector<IcnfIncrement> increments;
    uint32_t maxVar {0};

    /// Revision r of the problem as a payload (maxVar of the whole file).
    RevisionPayload payload(uint32_t revision) const;
};

// DIMACS-like text: 'c' comments, an optional 'p' header, 0-terminated
// clauses (may span lines), "a <lits> 0" assumption lines, and "#inc"
// lines separating increments: k separators always make k+1 increments,
// empty ones included (an empty increment is a plain re-solve).
IcnfProblem parseIcnf(std::istream& in);
IcnfProblem parseIcnfFile(const std::filesystem::path& file);
std::string writeIcnf(const IcnfProblem& problem);

} // namespace incrasat::harness
