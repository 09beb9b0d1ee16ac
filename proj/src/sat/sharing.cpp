#include "incrasat/sat/sharing.hpp"

#include <algorithm>

namespace incrasat::sat {

size_t AggregatedBatch::literalCount() const {
    size_t n = 0;
    for (const auto& c : clauses) n += c.size();
    return n;
}

AggregatedBatch toAggregated(const SharedClauseBatch& batch) {
    return {batch.clauses, batch.sourceRevision};
}

bool sharingOrder(const Clause& a, const Clause& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
}

std::vector<Clause> packShortestFirst(std::vector<Clause> clauses, size_t budget, size_t maxLen) {
    std::vector<Clause> canon;
    canon.reserve(clauses.size());
    for (auto& c : clauses) {
        if (c.empty() || c.size() > maxLen) continue;
        if (auto n = normalizeClause(std::move(c))) canon.push_back(std::move(*n));
    }
    std::sort(canon.begin(), canon.end(), sharingOrder);
    canon.erase(std::unique(canon.begin(), canon.end()), canon.end());
    size_t used = 0, keep = 0;
    for (; keep < canon.size(); keep++) {
        if (used + canon[keep].size() > budget) break;
        used += canon[keep].size();
    }
    canon.resize(keep);
    return canon;
}

AggregatedBatch aggregateBatches(const AggregatedBatch& a, const AggregatedBatch& b, size_t budget) {
    std::vector<Clause> all;
    all.reserve(a.clauses.size() + b.clauses.size());
    all.insert(all.end(), a.clauses.begin(), a.clauses.end());
    all.insert(all.end(), b.clauses.begin(), b.clauses.end());
    AggregatedBatch out;
    out.clauses = packShortestFirst(std::move(all), budget, SIZE_MAX);
    out.maxRevision = std::max(a.maxRevision, b.maxRevision);
    return out;
}

ImportDecision importFilter(AggregatedBatch batch, uint32_t myRevision) {
    ImportDecision d;
    if (batch.maxRevision <= myRevision) d.admissible = std::move(batch.clauses);
    else d.deferred = std::move(batch);
    return d;
}

void writeBatch(ByteWriter& w, const AggregatedBatch& batch) {
    w.u32(batch.maxRevision);
    w.u64(batch.clauses.size());
    for (const auto& c : batch.clauses) {
        w.u32(static_cast<uint32_t>(c.size()));
        for (Literal l : c) w.i32(l);
    }
}

AggregatedBatch readBatch(ByteReader& r) {
    AggregatedBatch b;
    b.maxRevision = r.u32();
    uint64_t n = r.u64();
    if (n > r.remaining() / 4) throw ParseError("clause count exceeds batch body", r.offset());
    b.clauses.resize(n);
    for (auto& c : b.clauses) {
        uint32_t len = r.u32();
        if (len > r.remaining() / 4) throw ParseError("clause length exceeds batch body", r.offset());
        c.resize(len);
        for (auto& l : c) l = r.i32();
    }
    return b;
}

} // namespace incrasat::sat
