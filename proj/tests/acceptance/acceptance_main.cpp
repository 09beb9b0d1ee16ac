// End-to-end acceptance checks. One PASS/FAIL line per criterion; exit code 1
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "incrasat/bridge/ipasir_session.hpp"
#include "incrasat/harness/counter.hpp"
#include "incrasat/harness/platform.hpp"
#include "incrasat/model/payload_codec.hpp"
#include "incrasat/node/fleet.hpp"
#include "incrasat/sat/cdcl_solver.hpp"
#include "incrasat/sat/sharing.hpp"
#include "support/oracle.hpp"
#include "support/tempdir.hpp"

using namespace incrasat;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass {false};
    std::string detail;
};

int g_failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) g_failures++;
    std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), s);
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<oracle::Sequence> corpus(size_t n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<oracle::Sequence> out;
    for (size_t i = 0; i < n; i++) out.push_back(oracle::randomSequence(rng, 30, 120, 5));
    return out;
}

FleetConfig threadedFleet(int workers, int threads, bool sharing, const fs::path& dir) {
    FleetConfig c;
    c.workers = workers;
    c.threadsPerProcess = threads;
    c.sharing = sharing;
    c.growthIntervalMs = 50;
    c.sharingPeriodMs = 20;
    c.transport = TransportKind::SOCKET;
    c.socketDir = dir / "sockets";
    return c;
}

bridge::DaemonConfig daemonAt(const fs::path& dir) {
    bridge::DaemonConfig d;
    d.submissionDir = dir;
    return d;
}

struct CorpusRun {
    std::vector<std::vector<int>> codes;  // per sequence, per revision
    size_t mismatches {0};
    size_t badModels {0};
    size_t badCores {0};
    size_t calls {0};
    std::string firstProblem;
};

// Runs every sequence through the IPASIR client against a local platform and
// checks each answer against the truth-table oracle.
CorpusRun runCorpus(const std::vector<oracle::Sequence>& seqs, FleetConfig fc) {
    TempDir tmp("incrasat_acc");
    fc.socketDir = tmp.path() / "sockets";
    auto dc = daemonAt(tmp.path());
    harness::LocalPlatform platform(fc, dc);
    CorpusRun run;
    for (size_t s = 0; s < seqs.size(); s++) {
        const auto& seq = seqs[s];
        bridge::IpasirSession session(dc.submissionDir);
        std::vector<Clause> all;
        std::vector<int> codes;
        for (size_t r = 0; r < seq.increments.size(); r++) {
            const auto& inc = seq.increments[r];
            for (auto& c : inc.clauses) {
                for (Literal l : c) session.add(l);
                session.add(0);
                all.push_back(c);
            }
            for (Literal a : inc.assumptions) session.assume(a);
            int code = session.solve();
            codes.push_back(code);
            run.calls++;
            bool sat = oracle::solvePruned(all, seq.numVars, inc.assumptions).has_value();
            auto problem = [&](const char* what) {
                if (run.firstProblem.empty()) run.firstProblem = fmt("%s in sequence %zu revision %zu", what, s, r);
            };
            if (code != (sat ? 10 : 20)) {
                run.mismatches++;
                problem("verdict mismatch");
                continue;
            }
            if (sat) {
                std::vector<Literal> model;
                for (int v = 1; v <= seq.numVars; v++) model.push_back(session.val(v) >= 0 ? v : -v);
                if (!oracle::modelValid(all, inc.assumptions, model)) {
                    run.badModels++;
                    problem("invalid model");
                }
            } else {
                std::vector<Literal> core;
                for (Literal a : inc.assumptions)
                    if (session.failed(a)) core.push_back(a);
                if (oracle::solvePruned(all, seq.numVars, core).has_value()) {
                    run.badCores++;
                    problem("failed assumptions do not explain unsatisfiability");
                }
            }
        }
        session.release();
        run.codes.push_back(std::move(codes));
    }
    platform.stop();
    return run;
}

// Shared between the oracle and the stability criteria.
std::vector<oracle::Sequence> g_corpus;
std::optional<CorpusRun> g_defaultRun;

Outcome oracleEquivalence() {
    auto start = std::chrono::steady_clock::now();
    g_corpus = corpus(200, 20240601);
    size_t calls = 0, bad = 0;
    std::string first;
    for (int w : {1, 4}) {
        TempDir tmp("incrasat_acc");
        auto run = runCorpus(g_corpus, threadedFleet(w, 3, true, tmp.path()));
        calls += run.calls;
        bad += run.mismatches + run.badModels + run.badCores;
        if (first.empty()) first = run.firstProblem;
        if (w == 4) g_defaultRun = std::move(run);
    }
    double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60;
    bool pass = bad == 0 && minutes < 10;
    return {pass, fmt("%zu sequences x {1,4} workers, %zu calls, %zu disagreements, %.2f min (limit 10)%s%s",
                      g_corpus.size(), calls, bad, minutes, first.empty() ? "" : "; first: ", first.c_str())};
}

// A solver that follows the leader one revision late receives every batch the
// leader exports; batches from ahead must be deferred, never imported early.
uint64_t laggingSolverFuzz(std::mt19937_64& rng, uint64_t& deferrals, size_t& wrong) {
    uint64_t checks = 0;
    for (int trial = 0; trial < 30; trial++) {
        auto seq = oracle::randomSequence(rng, 24, 110, 5);
        sat::SolverConfig lc = sat::diversifiedConfig(rng(), 0);
        lc.maxSharedLength = 30;
        sat::CdclSolver leader(lc), lagger(sat::diversifiedConfig(rng(), 1));
        std::vector<Clause> all;
        for (size_t r = 0; r < seq.increments.size(); r++) {
            const auto& inc = seq.increments[r];
            RevisionPayload p {static_cast<uint32_t>(r), inc.clauses, inc.assumptions,
                               static_cast<uint32_t>(seq.numVars)};
            p.normalize();
            leader.ingest(p);
            all.insert(all.end(), inc.clauses.begin(), inc.clauses.end());
            leader.solve(inc.assumptions);
            auto batch = sat::toAggregated(leader.exportClauses(1500));
            batch.maxRevision = r;
            // easy revisions learn nothing; an original clause is a valid stand-in
            for (size_t i = 0; batch.clauses.empty() && i < all.size(); i++)
                if (auto norm = normalizeClause(all[i]); norm && !norm->empty()) batch.clauses.push_back(*norm);
            if (!batch.clauses.empty()) {
                auto before = lagger.stats().deferredBatches;
                lagger.offerBatch(batch);
                if (r > 0 && lagger.stats().deferredBatches == before) wrong++;
            }
            lagger.ingest(p);
            auto out = lagger.solve(inc.assumptions);
            bool sat = oracle::solvePruned(all, seq.numVars, inc.assumptions).has_value();
            if (out.verdict != (sat ? Verdict::SAT : Verdict::UNSAT)) wrong++;
            checks++;
        }
        deferrals += lagger.stats().deferredBatches;
    }
    return checks;
}

// Random 3-SAT near the threshold, split over revisions: large enough that
// solves span many sharing epochs.
oracle::Sequence hardSequence(std::mt19937_64& rng) {
    oracle::Sequence s;
    s.numVars = 60 + rng() % 21;
    int revisions = 3 + rng() % 3;
    int total = static_cast<int>(s.numVars * 4.2);
    for (int r = 0; r < revisions; r++) {
        oracle::Increment inc;
        int n = total / revisions + (r < total % revisions);
        for (int i = 0; i < n; i++) {
            Clause c;
            for (int k = 0; k < 3; k++) {
                Literal v = 1 + rng() % s.numVars;
                c.push_back(rng() & 1 ? v : -v);
            }
            inc.clauses.push_back(c);
        }
        for (int k = rng() % 3; k > 0; k--) {
            Literal v = 1 + rng() % s.numVars;
            inc.assumptions.push_back(rng() & 1 ? v : -v);
        }
        s.increments.push_back(std::move(inc));
    }
    return s;
}

Outcome revisionSafety() {
    uint64_t violationsBefore = sat::revisionSafetyViolations();
    uint64_t prematureBefore = prematureSolveStarts();
    std::mt19937_64 rng(8086);
    uint64_t fleetDeferrals = 0, imported = 0, epochs = 0;
    size_t wrong = 0, runs = 0, solves = 0;
    for (int run = 0; run < 50; run++) {
        FleetConfig c;
        c.workers = 2 + rng() % 6;
        c.threadsPerProcess = 1 + rng() % 2;
        c.deterministicSeed = rng();
        c.maxDelayMs = rng() % 9;
        c.conflictsPerStep = 4 + rng() % 29;
        c.sharingPeriodMs = 2 + rng() % 29;
        c.growthIntervalMs = 5 + rng() % 56;
        c.sharedClauseMaxLen = 30;
        Fleet fleet(c);
        auto seq = hardSequence(rng);
        sat::CdclSolver reference;
        for (size_t r = 0; r < seq.increments.size(); r++) {
            const auto& inc = seq.increments[r];
            fleet.advance(rng() % 31);
            RevisionPayload p {static_cast<uint32_t>(r), inc.clauses, inc.assumptions,
                               static_cast<uint32_t>(seq.numVars)};
            fleet.submit("fuzz", p);
            p.normalize();
            reference.ingest(p);
            auto expected = reference.solve(inc.assumptions).verdict;
            auto concl = fleet.awaitResult("fuzz", r, 3600000);
            if (!concl || concl->outcome.verdict != expected) wrong++;
            solves++;
        }
        fleet.finalize("fuzz");
        fleet.advance(20);
        auto t = fleet.workerTotals();
        fleetDeferrals += t.deferredBatches;
        imported += t.imported;
        epochs += t.epochs;
        runs++;
    }
    uint64_t engineDeferrals = 0;
    size_t engineWrong = 0;
    uint64_t engineSolves = laggingSolverFuzz(rng, engineDeferrals, engineWrong);
    uint64_t violations = sat::revisionSafetyViolations() - violationsBefore;
    uint64_t premature = prematureSolveStarts() - prematureBefore;
    bool pass = violations == 0 && premature == 0 && wrong == 0 && engineWrong == 0 && engineDeferrals > 0;
    return {pass, fmt("%zu fuzzed fleet runs (%zu solves, %zu wrong, %llu epochs, %llu imported, %llu deferred); "
                      "lagging-solver fuzz %llu solves, %llu deferred, %zu wrong; violations %llu, premature "
                      "starts %llu (both must be 0)",
                      runs, solves, wrong, (unsigned long long) epochs, (unsigned long long) imported,
                      (unsigned long long) fleetDeferrals, (unsigned long long) engineSolves,
                      (unsigned long long) engineDeferrals, engineWrong, (unsigned long long) violations,
                      (unsigned long long) premature)};
}

RevisionPayload hardPayload(uint32_t rev) { return {rev, oracle::pigeonhole(11, 10), {}, 110}; }

// Checks the staircase 1,3,7,15,31 at t0 + k*500 ms within tol, in series
// entries [from, from+5).
bool staircase(const std::vector<harness::TimedValue>& s, size_t from, double t0, double tol, double& worst) {
    const int expected[] = {1, 3, 7, 15, 31};
    if (s.size() < from + 5) return false;
    for (int k = 0; k < 5; k++) {
        const auto& e = s[from + k];
        if (e.value != expected[k]) return false;
        worst = std::max(worst, std::abs(e.timeMs - (t0 + 500.0 * k)));
        if (std::abs(e.timeMs - (t0 + 500.0 * k)) > tol) return false;
    }
    return true;
}

Outcome demandDynamics() {
    std::string detail;
    bool pass = true;
    // virtual time: exact
    {
        FleetConfig c;
        c.workers = 31;
        c.threadsPerProcess = 1;
        c.deterministicSeed = 7;
        c.maxDelayMs = 3;
        c.conflictsPerStep = 16;
        Fleet fleet(c);
        fleet.advance(10);
        double t0 = fleet.now();
        fleet.submit("hard", hardPayload(0));
        fleet.advance(2300);
        fleet.cancel("hard");
        fleet.advance(20);
        int afterCancel = fleet.coordinator().volume("hard");
        double t1 = fleet.now();
        fleet.submit("hard", hardPayload(1));
        fleet.advance(2300);
        auto d = fleet.metrics().demands()["hard"];
        auto v = fleet.metrics().volumes()["hard"];
        double worst = 0;
        bool ok = d.size() == 11 && staircase(d, 0, t0, 0, worst) && d[5].value == 1 && staircase(d, 6, t1, 0, worst)
            && afterCancel == 1;
        // volume only records changes
        std::vector<harness::TimedValue> changes;
        for (auto& e : d)
            if (changes.empty() || changes.back().value != e.value) changes.push_back(e);
        ok = ok && v == changes;
        if (!ok)
            for (size_t i = 0; i < std::max(d.size(), v.size()); i++)
                std::fprintf(stderr, "  %zu demand %s volume %s\n", i,
                             i < d.size() ? fmt("%.0f:%d", d[i].timeMs, d[i].value).c_str() : "-",
                             i < v.size() ? fmt("%.0f:%d", v[i].timeMs, v[i].value).c_str() : "-");
        fleet.cancel("hard");
        fleet.finalize("hard");
        pass &= ok;
        detail += fmt("virtual time: %s (%zu demand events, volume after cancel %d)", ok ? "exact" : "MISMATCH",
                      d.size(), afterCancel);
    }
    // sockets, wall clock: +-50 ms
    {
        TempDir tmp("incrasat_acc");
        FleetConfig c;
        c.workers = 31;
        c.threadsPerProcess = 1;
        c.transport = TransportKind::SOCKET;
        c.socketDir = tmp.path() / "sockets";
        c.sharingPeriodMs = 500;
        Fleet fleet(c);
        fleet.start();
        double t0 = fleet.now();
        fleet.submit("hard", hardPayload(0));
        t0 = fleet.metrics().demands()["hard"].front().timeMs;
        fleet.advance(2300);
        fleet.cancel("hard");
        bool dropped = fleet.runUntil([&] { return fleet.coordinator().volume("hard") == 1; }, 1000);
        fleet.advance(100);
        fleet.submit("hard", hardPayload(1));
        auto d = fleet.metrics().demands()["hard"];
        double t1 = d.back().timeMs;
        fleet.advance(2300);
        d = fleet.metrics().demands()["hard"];
        double worst = 0;
        bool ok = d.size() == 11 && staircase(d, 0, t0, 50, worst) && d[5].value == 1
            && staircase(d, 6, t1, 50, worst) && dropped;
        fleet.cancel("hard");
        fleet.finalize("hard");
        fleet.stop();
        pass &= ok;
        detail += fmt("; sockets: %s (%zu demand events, worst step offset %.1f ms, limit 50)",
                      ok ? "within tolerance" : "OUT OF TOLERANCE", d.size(), worst);
    }
    return {pass, detail};
}

Outcome latency() {
    TempDir tmp("incrasat_acc");
    auto fc = threadedFleet(4, 3, true, tmp.path());
    fc.growthIntervalMs = 500;
    fc.sharingPeriodMs = 500;
    auto dc = daemonAt(tmp.path());
    harness::LocalPlatform platform(fc, dc);
    bridge::IpasirSession session(dc.submissionDir);
    std::vector<double> t;
    bool allSat = true;
    for (int i = 1; i <= 100; i++) {
        session.add(i);
        session.add(0);
        auto start = std::chrono::steady_clock::now();
        allSat &= session.solve() == 10;
        t.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
    }
    session.release();
    platform.stop();
    std::sort(t.begin(), t.end());
    double median = (t[49] + t[50]) / 2;
    double p95 = t[94];
    bool pass = allSat && median < 50 && p95 < 100;
    return {pass, fmt("100 unit-clause calls, 4 workers: median %.2f ms (limit 50), p95 %.2f ms (limit 100), max "
                      "%.2f ms%s",
                      median, p95, t.back(), allSat ? "" : ", some calls not SAT")};
}

Outcome counterPattern() {
    TempDir tmp("incrasat_acc");
    auto fc = threadedFleet(4, 2, true, tmp.path());
    fc.growthIntervalMs = 1;
    auto dc = daemonAt(tmp.path());
    harness::LocalPlatform platform(fc, dc);
    bridge::IpasirSession session(dc.submissionDir);
    auto& coord = platform.fleet().coordinator();
    std::vector<int> volumesAfter;
    auto codes = harness::runCounterApp(3, session, [&](uint32_t) {
        volumesAfter.push_back(coord.volume(session.jobName()));
    });
    auto series = platform.fleet().metrics().volumes()[session.jobName()];
    session.release();
    platform.stop();
    int peak = 0;
    for (auto& e : series) peak = std::max(peak, e.value);
    std::vector<int> expected(7, 20);
    expected.push_back(10);
    bool shrunk = std::all_of(volumesAfter.begin(), volumesAfter.end(), [](int v) { return v == 1; });
    bool pass = codes == expected && shrunk && volumesAfter.size() == 8;
    std::string pattern;
    for (int c : codes) pattern += c == 10 ? "S" : c == 20 ? "U" : "?";
    return {pass, fmt("3-bit counter: %s (expected UUUUUUUS), volume 1 after every revision: %s, peak volume %d",
                      pattern.c_str(), shrunk ? "yes" : "no", peak)};
}

Outcome verdictStability() {
    if (!g_defaultRun) return {false, "oracle run missing"};
    size_t differing = 0, configs = 1, calls = 0;
    for (int threads : {1, 3})
        for (bool sharing : {true, false}) {
            if (threads == 3 && sharing) continue;  // the oracle run
            TempDir tmp("incrasat_acc");
            auto run = runCorpus(g_corpus, threadedFleet(4, threads, sharing, tmp.path()));
            configs++;
            calls += run.calls;
            for (size_t s = 0; s < g_corpus.size(); s++)
                for (size_t r = 0; r < run.codes[s].size(); r++)
                    differing += run.codes[s][r] != g_defaultRun->codes[s][r];
        }
    return {differing == 0, fmt("%zu configurations (threads {1,3} x sharing {on,off}), %zu extra calls, %zu "
                                "differing verdicts",
                                configs, calls, differing)};
}

Outcome codecAndAggregation() {
    std::mt19937_64 rng(99);
    size_t codecBad = 0;
    for (int i = 0; i < 1000; i++) {
        RevisionPayload p;
        p.revision = rng() % 1000;
        p.maxVar = 1 + rng() % 5000;
        int n = rng() % 60;
        for (int k = 0; k < n; k++) {
            Clause c;
            int len = rng() % 7;
            for (int j = 0; j < len; j++) {
                Literal v = 1 + rng() % p.maxVar;
                c.push_back(rng() & 1 ? v : -v);
            }
            p.clauses.push_back(c);
        }
        int a = rng() % 10;
        for (int k = 0; k < a; k++) {
            Literal v = 1 + rng() % p.maxVar;
            p.assumptions.push_back(rng() & 1 ? v : -v);
        }
        if (!(decodePayload(encodePayload(p)) == p)) codecBad++;
    }
    auto randomBatch = [&] {
        sat::AggregatedBatch b;
        b.maxRevision = rng() % 6;
        int n = rng() % 30;
        for (int i = 0; i < n; i++) {
            Clause c;
            int len = 1 + rng() % 5;
            for (int k = 0; k < len; k++) {
                Literal v = 1 + rng() % 12;
                c.push_back(rng() & 1 ? v : -v);
            }
            if (auto norm = normalizeClause(c)) b.clauses.push_back(*norm);
        }
        return b;
    };
    auto asSet = [](const std::vector<Clause>& cs) { return std::set<Clause>(cs.begin(), cs.end()); };
    size_t aggBad = 0;
    for (int i = 0; i < 500; i++) {
        auto a = randomBatch(), b = randomBatch(), c = randomBatch();
        size_t budget = 10 + rng() % 80;
        auto ab = sat::aggregateBatches(a, b, budget);
        auto ba = sat::aggregateBatches(b, a, budget);
        auto left = sat::aggregateBatches(ab, c, budget);
        auto right = sat::aggregateBatches(a, sat::aggregateBatches(b, c, budget), budget);
        bool ok = asSet(ab.clauses) == asSet(ba.clauses) && ab.maxRevision == ba.maxRevision
            && asSet(left.clauses) == asSet(right.clauses) && left.maxRevision == right.maxRevision
            && left.literalCount() <= budget;
        aggBad += !ok;
    }
    return {codecBad == 0 && aggBad == 0,
            fmt("1000 payload round trips, %zu mismatches; 500 aggregation triples, %zu law violations", codecBad,
                aggBad)};
}

} // namespace

int main() {
    report("oracle equivalence", oracleEquivalence);
    report("verdict stability across threads and sharing", verdictStability);
    report("revision safety under fuzzed timing", revisionSafety);
    report("demand growth and shrink", demandDynamics);
    report("turnaround latency", latency);
    report("counter layer pattern", counterPattern);
    report("codec and aggregation laws", codecAndAggregation);
    std::printf("%d criteria failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
