#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>

#include "incrasat/sat/cdcl_solver.hpp"
#include "support/oracle.hpp"

using namespace incrasat;
using namespace incrasat::sat;

namespace {

std::set<Clause> asSet(const std::vector<Clause>& cs) { return {cs.begin(), cs.end()}; }

AggregatedBatch randomBatch(std::mt19937_64& rng) {
    AggregatedBatch b;
    b.maxRevision = rng() % 6;
    int n = rng() % 30;
    for (int i = 0; i < n; i++) {
        Clause c;
        int len = 1 + rng() % 5;
        for (int k = 0; k < len; k++) {
            int v = 1 + rng() % 12;
            c.push_back(rng() & 1 ? v : -v);
        }
        if (auto norm = normalizeClause(c)) b.clauses.push_back(*norm);
    }
    std::sort(b.clauses.begin(), b.clauses.end(), sharingOrder);
    b.clauses.erase(std::unique(b.clauses.begin(), b.clauses.end()), b.clauses.end());
    return b;
}

void checkAgainstOracle(const oracle::Sequence& seq, SolverConfig config) {
    CdclSolver solver(config);
    std::vector<Clause> all;
    for (size_t r = 0; r < seq.increments.size(); r++) {
        const auto& inc = seq.increments[r];
        RevisionPayload p {static_cast<uint32_t>(r), inc.clauses, inc.assumptions,
                           static_cast<uint32_t>(seq.numVars)};
        p.normalize();
        solver.ingest(p);
        all.insert(all.end(), inc.clauses.begin(), inc.clauses.end());
        auto out = solver.solve(inc.assumptions);
        bool expectSat = oracle::solve(all, seq.numVars, inc.assumptions).has_value();
        REQUIRE(out.verdict == (expectSat ? Verdict::SAT : Verdict::UNSAT));
        if (expectSat) {
            CHECK(out.model.size() == static_cast<size_t>(seq.numVars));
            CHECK(oracle::modelValid(all, inc.assumptions, out.model));
        } else {
            for (Literal f : out.failed)
                CHECK(std::find(inc.assumptions.begin(), inc.assumptions.end(), f) != inc.assumptions.end());
            CHECK(oracle::unsatWith(all, seq.numVars, out.failed));
            CHECK(solver.failedAssumptions() == out.failed);
        }
    }
}

} // namespace

TEST_CASE("two-revision example from the IPASIR round trip") {
    CdclSolver s;
    s.ingest({0, {{1, 2}}, {-1}, 2});
    std::vector<Literal> assume {-1};
    auto r0 = s.solve(assume);
    REQUIRE(r0.verdict == Verdict::SAT);
    CHECK(r0.model == std::vector<Literal> {-1, 2});
    s.ingest({1, {{-2}}, {-1}, 2});
    auto r1 = s.solve(assume);
    REQUIRE(r1.verdict == Verdict::UNSAT);
    CHECK(r1.failed == std::vector<Literal> {-1});
    CHECK(s.currentRevision() == 1);
    // Without the assumption the formula is satisfiable again.
    auto r2 = s.solve({});
    CHECK(r2.verdict == Verdict::SAT);
    CHECK(r2.model == std::vector<Literal> {1, -2});
}

TEST_CASE("empty clause makes the revision UNSAT with no failed assumptions") {
    CdclSolver s;
    s.ingest({0, {{1}, {}}, {}, 1});
    std::vector<Literal> assume {1};
    auto out = s.solve(assume);
    CHECK(out.verdict == Verdict::UNSAT);
    CHECK(out.failed.empty());
}

TEST_CASE("failed assumptions are a contract of UNSAT results only") {
    CdclSolver s;
    CHECK_THROWS_AS(s.failedAssumptions(), ContractError);
    s.ingest({0, {{1, 2}}, {}, 2});
    s.solve({});
    CHECK_THROWS_AS(s.failedAssumptions(), ContractError);
}

TEST_CASE("assumptions where only one participates") {
    CdclSolver s;
    s.ingest({0, {{-1, 2}, {-2}}, {}, 3});
    std::vector<Literal> assume {1, 3};
    auto out = s.solve(assume);
    REQUIRE(out.verdict == Verdict::UNSAT);
    CHECK(oracle::unsatWith({{-1, 2}, {-2}}, 3, out.failed));
    CHECK(std::find(out.failed.begin(), out.failed.end(), 3) == out.failed.end());
}

TEST_CASE("contradictory assumptions") {
    CdclSolver s;
    s.ingest({0, {}, {}, 1});
    std::vector<Literal> assume {1, -1};
    auto out = s.solve(assume);
    REQUIRE(out.verdict == Verdict::UNSAT);
    CHECK(oracle::unsatWith({}, 1, out.failed));
}

TEST_CASE("ingestion enforces revision order and variable bounds") {
    CdclSolver s;
    CHECK_THROWS_AS(s.ingest({1, {}, {}, 0}), ProtocolError);
    CHECK_THROWS_AS(s.ingest({0, {{3}}, {}, 2}), ValidationError);
    s.ingest({0, {}, {}, 0});
    CHECK_THROWS_AS(s.ingest({0, {}, {}, 0}), ProtocolError);
}

TEST_CASE("pigeonhole instances are UNSAT") {
    for (auto [p, h] : {std::pair {3, 2}, std::pair {5, 4}, std::pair {7, 6}}) {
        CdclSolver s;
        s.ingest({0, oracle::pigeonhole(p, h), {}, static_cast<uint32_t>(p * h)});
        CHECK(s.solve({}).verdict == Verdict::UNSAT);
    }
    CHECK_FALSE(oracle::solve(oracle::pigeonhole(3, 2), 6).has_value());
    CdclSolver fits;
    fits.ingest({0, oracle::pigeonhole(4, 4), {}, 16});
    auto out = fits.solve({});
    REQUIRE(out.verdict == Verdict::SAT);
    CHECK(oracle::modelValid(oracle::pigeonhole(4, 4), {}, out.model));
}

TEST_CASE("terminate probe and conflict budget give UNKNOWN") {
    CdclSolver s;
    s.ingest({0, oracle::pigeonhole(10, 9), {}, 90});
    SolveLimits stop;
    stop.terminate = [] { return true; };
    CHECK(s.solve({}, stop).verdict == Verdict::UNKNOWN);
    SolveLimits budget;
    budget.conflictBudget = 50;
    CHECK(s.solve({}, budget).verdict == Verdict::UNKNOWN);
    CHECK_THROWS_AS(s.failedAssumptions(), ContractError);
}

TEST_CASE("random incremental sequences agree with the truth-table oracle") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 150; i++) {
        auto seq = oracle::randomSequence(rng, 14, 70, 5);
        checkAgainstOracle(seq, diversifiedConfig(i, i % 4));
    }
}

TEST_CASE("exported clauses are entailed by the ingested revisions") {
    std::mt19937_64 rng(5);
    size_t exported = 0;
    for (int i = 0; i < 60; i++) {
        auto seq = oracle::randomSequence(rng, 14, 70, 4);
        CdclSolver s(diversifiedConfig(i, i % 3));
        std::vector<Clause> all;
        for (size_t r = 0; r < seq.increments.size(); r++) {
            auto& inc = seq.increments[r];
            s.ingest({static_cast<uint32_t>(r), inc.clauses, inc.assumptions, static_cast<uint32_t>(seq.numVars)});
            all.insert(all.end(), inc.clauses.begin(), inc.clauses.end());
            s.solve(inc.assumptions);
            auto batch = s.exportClauses(1500);
            CHECK(batch.sourceRevision == r);
            for (auto& c : batch.clauses) {
                CHECK(c.size() <= kDefaultSharedClauseMaxLen);
                CHECK(oracle::entailed(all, seq.numVars, c));
                exported++;
            }
        }
    }
    CHECK(exported > 0);
}

TEST_CASE("fresh solver exports an empty batch stamped with its revision") {
    CdclSolver s;
    s.ingest({0, {}, {}, 0});
    s.ingest({1, {}, {}, 0});
    s.ingest({2, {}, {}, 0});
    auto b = s.exportClauses(100);
    CHECK(b.clauses.empty());
    CHECK(b.sourceRevision == 2);
}

TEST_CASE("shortest-first packing within a literal budget") {
    auto packed = packShortestFirst({{2, 4, 5}, {1, -2}, {-3}}, 5, 8);
    CHECK(packed == std::vector<Clause> {{-3}, {1, -2}});
    CHECK(packShortestFirst({{1, 2, 3, 4, 5, 6, 7, 8, 9}, {1}}, 100, 8) == std::vector<Clause> {{1}});
}

TEST_CASE("aggregation examples") {
    AggregatedBatch empty;
    CHECK(aggregateBatches(empty, empty) == AggregatedBatch {});
    AggregatedBatch a {{{-2, 1}}, 1}, b {{{-2, 1}, {3}}, 3};
    auto m = aggregateBatches(a, b);
    CHECK(m.maxRevision == 3);
    CHECK(m.clauses == std::vector<Clause> {{3}, {1, -2}});
    AggregatedBatch big;
    for (int v = 1; v <= 1000; v++) big.clauses.push_back({v, v + 1000});
    CHECK(aggregateBatches(big, empty).literalCount() <= kDefaultSharingBudget);
}

TEST_CASE("aggregation is commutative and associative on random triples") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 500; i++) {
        auto a = randomBatch(rng), b = randomBatch(rng), c = randomBatch(rng);
        size_t budget = 10 + rng() % 80;
        auto ab = aggregateBatches(a, b, budget);
        CHECK(ab == aggregateBatches(b, a, budget));
        auto left = aggregateBatches(ab, c, budget);
        auto right = aggregateBatches(a, aggregateBatches(b, c, budget), budget);
        CHECK(asSet(left.clauses) == asSet(right.clauses));
        CHECK(left.maxRevision == right.maxRevision);
        CHECK(left.literalCount() <= budget);
    }
}

TEST_CASE("import filter admits current revisions and defers future ones") {
    AggregatedBatch b {{{1}, {2, 3}}, 2};
    auto now = importFilter(b, 2);
    CHECK(now.admissible.size() == 2);
    CHECK_FALSE(now.deferred);
    b.maxRevision = 3;
    auto later = importFilter(b, 2);
    CHECK(later.admissible.empty());
    REQUIRE(later.deferred);
    CHECK(later.deferred->clauses.size() == 2);
}

TEST_CASE("solver defers a future batch and imports it on reaching the revision") {
    uint64_t violationsBefore = revisionSafetyViolations();
    CdclSolver s;
    s.ingest({0, {{1, 2, 3}}, {}, 3});
    s.ingest({1, {}, {}, 3});
    s.ingest({2, {}, {}, 3});
    AggregatedBatch future {{{-1}}, 3};
    CHECK(s.offerBatch(future) == 0);
    CHECK(s.deferredBatchCount() == 1);
    std::vector<Literal> assume {1};
    CHECK(s.solve(assume).verdict == Verdict::SAT);
    s.ingest({3, {{-1, 2}, {-1, -2}}, {}, 3});
    CHECK(s.deferredBatchCount() == 0);
    CHECK(s.stats().imported == 1);
    auto out = s.solve(assume);
    CHECK(out.verdict == Verdict::UNSAT);
    CHECK(revisionSafetyViolations() == violationsBefore);
}

TEST_CASE("at most four deferred batches are kept") {
    CdclSolver s;
    s.ingest({0, {}, {}, 2});
    for (uint32_t r = 1; r <= 6; r++) s.offerBatch({{{static_cast<Literal>(1)}}, r});
    CHECK(s.deferredBatchCount() == 4);
    CHECK(s.stats().droppedDeferred == 2);
}

TEST_CASE("a solver never re-imports clauses it exported itself") {
    auto config = diversifiedConfig(3, 0);
    config.maxSharedLength = 100;
    CdclSolver s(config);
    auto php = oracle::pigeonhole(9, 8);
    s.ingest({0, php, {}, 72});
    SolveLimits budget;
    budget.conflictBudget = 300;
    REQUIRE(s.solve({}, budget).verdict == Verdict::UNKNOWN);
    auto batch = s.exportClauses(1500);
    REQUIRE_FALSE(batch.clauses.empty());
    auto before = s.stats().imported;
    s.offerBatch(toAggregated(batch));
    CHECK(s.stats().imported == before);
    CHECK(s.stats().selfSkipped == batch.clauses.size());

    CdclSolver other(diversifiedConfig(4, 1));
    other.ingest({0, php, {}, 72});
    CHECK(other.offerBatch(toAggregated(batch)) == batch.clauses.size());
}

TEST_CASE("batch serialization round trip") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 50; i++) {
        auto b = randomBatch(rng);
        ByteWriter w;
        writeBatch(w, b);
        auto bytes = w.take();
        ByteReader r(bytes);
        CHECK(readBatch(r) == b);
    }
}

TEST_CASE("pruned truth-table oracle agrees with full enumeration") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 400; i++) {
        auto seq = oracle::randomSequence(rng, 12, 60, 3);
        std::vector<Clause> all;
        for (auto& inc : seq.increments) {
            all.insert(all.end(), inc.clauses.begin(), inc.clauses.end());
            auto full = oracle::solve(all, seq.numVars, inc.assumptions);
            auto pruned = oracle::solvePruned(all, seq.numVars, inc.assumptions);
            REQUIRE(full.has_value() == pruned.has_value());
            if (pruned) {
                auto withUnits = all;
                for (auto l : inc.assumptions) withUnits.push_back({l});
                CHECK(oracle::satisfies(withUnits, *pruned));
            }
        }
    }
    CHECK_FALSE(oracle::solvePruned({{}}, 3));
    CHECK_FALSE(oracle::solvePruned(oracle::pigeonhole(4, 3), 12));
}
