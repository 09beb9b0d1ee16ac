#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "incrasat/model/bytes.hpp"
#include "incrasat/model/types.hpp"

namespace incrasat::sat {

constexpr size_t kDefaultSharedClauseMaxLen = 8;
constexpr size_t kDefaultSharingBudget = 1500;

/// Learned clauses exported by one solver (or one node), stamped with the
/// exporter's revision at export time.
struct SharedClauseBatch {
    std::vector<Clause> clauses;
    uint32_t sourceRevision {0};
    uint32_t origin {0};
};

/// Merge of several contributions. maxRevision is the largest revision of
/// any contribution; a solver behind that revision must not import it.
struct AggregatedBatch {
    std::vector<Clause> clauses;
    uint32_t maxRevision {0};

    size_t literalCount() const;
    bool operator==(const AggregatedBatch&) const = default;
};

AggregatedBatch toAggregated(const SharedClauseBatch& batch);

/// Canonical order used for sharing: shorter first, then lexicographic on
/// the normalized literal sequence.
bool sharingOrder(const Clause& a, const Clause& b);

/// Sorts `clauses` in sharing order (after dropping clauses longer than
/// maxLen) and keeps the longest prefix whose literal total fits `budget`.
std::vector<Clause> packShortestFirst(std::vector<Clause> clauses, size_t budget, size_t maxLen);

/// Union with exact-duplicate removal, re-sorted shortest-first, truncated to
/// `budget` literals. Commutative and associative on (clause set, maxRevision).
AggregatedBatch aggregateBatches(const AggregatedBatch& a, const AggregatedBatch& b,
                                 size_t budget = kDefaultSharingBudget);

struct ImportDecision {
    std::vector<Clause> admissible;
    // Set when the batch is from a future revision.
    std::optional<AggregatedBatch> deferred;
};

/// Revision gate: all clauses admissible if batch.maxRevision <= myRevision,
/// otherwise the whole batch is deferred.
ImportDecision importFilter(AggregatedBatch batch, uint32_t myRevision);

void writeBatch(ByteWriter& w, const AggregatedBatch& batch);
AggregatedBatch readBatch(ByteReader& r);

} // namespace incrasat::sat
