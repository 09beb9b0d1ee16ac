#include "doctest.h"

#include <fstream>
#include <random>
#include <sstream>

#include "incrasat/harness/counter.hpp"
#include "incrasat/harness/icnf.hpp"
#include "incrasat/harness/metrics.hpp"
#include "incrasat/harness/platform.hpp"
#include "incrasat/harness/run_config.hpp"
#include "incrasat/sat/cdcl_solver.hpp"
#include "support/oracle.hpp"
#include "support/tempdir.hpp"

using namespace incrasat;
using namespace incrasat::harness;
namespace fs = std::filesystem;

namespace {

IcnfProblem parse(const std::string& text) {
    std::istringstream in(text);
    return parseIcnf(in);
}

// Oracle verdict of every increment, clauses accumulating.
std::vector<bool> oracleVerdicts(const IcnfProblem& p) {
    std::vector<bool> out;
    std::vector<Clause> all;
    for (auto& inc : p.increments) {
        all.insert(all.end(), inc.clauses.begin(), inc.clauses.end());
        out.push_back(oracle::solve(all, p.maxVar, inc.assumptions).has_value());
    }
    return out;
}

std::vector<Verdict> engineVerdicts(const std::vector<RevisionPayload>& payloads) {
    sat::CdclSolver s;
    std::vector<Verdict> out;
    for (auto& p : payloads) {
        s.ingest(p);
        out.push_back(s.solve(p.assumptions).verdict);
    }
    return out;
}

} // namespace

TEST_CASE("iCNF parsing") {
    auto one = parse("p cnf 1 1\n1 0\n");
    REQUIRE(one.increments.size() == 1);
    CHECK(oracleVerdicts(one) == std::vector<bool> {true});

    std::ostringstream php;
    for (auto& c : oracle::pigeonhole(3, 2)) {
        for (auto l : c) php << l << " ";
        php << "0\n";
    }
    auto p32 = parse(php.str());
    CHECK(p32.maxVar == 6);
    CHECK(oracleVerdicts(p32) == std::vector<bool> {false});

    auto two = parse("c two increments\n1 2 0\n#inc\n-1 0\n-2\n 0\na 2 0\n");
    REQUIRE(two.increments.size() == 2);
    CHECK(two.increments[1].clauses == std::vector<Clause> {{-1}, {-2}});
    CHECK(two.increments[1].assumptions == std::vector<Literal> {2});
    CHECK(oracleVerdicts(two) == std::vector<bool> {true, false});

    auto empties = parse("#inc\n#inc\n");
    CHECK(empties.increments.size() == 3);
    CHECK(parse("").increments.size() == 1);
    CHECK(parse(writeIcnf(two)).increments.size() == 2);
    CHECK(parse(writeIcnf(two)).increments[1].clauses == two.increments[1].clauses);
    CHECK(parse(writeIcnf(empties)).increments.size() == 3);

    auto errorLine = [](const std::string& text) {
        try {
            parse(text);
        } catch (const IcnfError& e) {
            return e.line();
        }
        return size_t(0);
    };
    CHECK(errorLine("1 0\n2 x 0\n") == 2);
    CHECK(errorLine("1 0\n\n3 4\n#inc\n") == 3);
    CHECK(errorLine("a 1\n") == 1);
    CHECK(errorLine("1 0\na 1 0 2\n") == 2);
    CHECK(errorLine("p dnf\n") == 1);
    CHECK(errorLine("1 2\n") == 1);
    CHECK(errorLine("999999999999 0\n") == 1);
}

TEST_CASE("counter encoding matches brute force for 1 and 2 bits") {
    CHECK_THROWS(CounterEncoding(0));
    for (int n : {1, 2}) {
        CounterEncoding enc(n);
        std::vector<Clause> all;
        std::vector<bool> verdicts;
        for (uint32_t k = 0; k < enc.revisions(); k++) {
            auto p = enc.revision(k);
            p.validate();
            all.insert(all.end(), p.clauses.begin(), p.clauses.end());
            verdicts.push_back(oracle::solve(all, p.maxVar, p.assumptions).has_value());
        }
        std::vector<bool> expected(enc.revisions(), false);
        expected.back() = true;
        CHECK(verdicts == expected);
    }
    CHECK(CounterEncoding(2).maxVar(3) == 14);
}

TEST_CASE("counter layer pattern on the engine up to 4 bits") {
    for (int n = 1; n <= 4; n++) {
        CounterEncoding enc(n);
        std::vector<RevisionPayload> ps;
        for (uint32_t k = 0; k < enc.revisions(); k++) ps.push_back(enc.revision(k));
        std::vector<Verdict> expected(enc.revisions(), Verdict::UNSAT);
        expected.back() = Verdict::SAT;
        CHECK(engineVerdicts(ps) == expected);
    }
}

TEST_CASE("counter app through the bridge") {
    TempDir tmp;
    FleetConfig fc;
    fc.workers = 2;
    fc.threadsPerProcess = 1;
    bridge::DaemonConfig dc;
    dc.submissionDir = tmp.path();
    LocalPlatform platform(fc, dc);
    bridge::IpasirSession s(tmp.path());
    CHECK(runCounterApp(1, s) == std::vector<int> {20, 10});
    bridge::IpasirSession s2(tmp.path());
    CHECK(runCounterApp(2, s2) == std::vector<int> {20, 20, 20, 10});
    CHECK(s2.revisions() == 4);
}

TEST_CASE("run configuration") {
    TempDir tmp;
    auto file = tmp.path() / "run.conf";
    std::ofstream(file) << "# fleet\nworkers = 8\nthreads_per_process=1 # per rank\n"
                           "submission_dir = \"/tmp/x#y\"\ndeterministic_seed = 5\nsharing = off\n";
    RunConfig c;
    c.loadFile(file);
    CHECK(c.workers == 8);
    CHECK(c.threadsPerProcess == 1);
    CHECK(c.submissionDir == "/tmp/x#y");
    CHECK(c.deterministicSeed == 5u);
    CHECK_FALSE(c.sharing);
    CHECK(c.fleetConfig().transport == TransportKind::LOOPBACK);
    c.set("deterministic_seed", "none");
    CHECK(c.fleetConfig().transport == TransportKind::SOCKET);
    CHECK_THROWS_AS(c.set("wokers", "1"), std::invalid_argument);
    CHECK_THROWS_AS(c.set("workers", "many"), std::invalid_argument);
    c.set("workers", "0");
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    std::ofstream(file) << "workers\n";
    try {
        RunConfig().loadFile(file);
        FAIL("no error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find(":1:") != std::string::npos);
    }
}

TEST_CASE("metrics CSV and plots") {
    TempDir tmp;
    MetricsRecorder empty;
    emitMetrics(empty, tmp.path() / "empty");
    CHECK(readCallsCsv(tmp.path() / "empty" / "calls.csv").empty());

    MetricsRecorder m;
    m.recordCall({"j", 0, Verdict::SAT, 1.5, 0.5});
    auto files = emitMetrics(m, tmp.path() / "one");
    auto calls = readCallsCsv(tmp.path() / "one" / "calls.csv");
    REQUIRE(calls.size() == 1);
    CHECK(calls[0].verdict == Verdict::SAT);
    CHECK(calls[0].turnaroundMs == doctest::Approx(1.5));
    CHECK(fs::exists(tmp.path() / "one" / "turnaround_cdf.svg"));

    std::mt19937_64 rng(3);
    std::vector<double> values;
    for (int i = 0; i < 100; i++) values.push_back(std::uniform_real_distribution<double>(0, 50)(rng));
    values.push_back(values[0]);
    auto cdf = empiricalCdf(values);
    CHECK(cdf.size() == 100);
    for (size_t i = 1; i < cdf.size(); i++) {
        CHECK(cdf[i].first > cdf[i - 1].first);
        CHECK(cdf[i].second > cdf[i - 1].second);
    }
    CHECK(cdf.front().second > 0);
    CHECK(cdf.back().second == doctest::Approx(1.0));

    // same-timestamp events collapse into the later one
    m.recordVolume("v", 10, 1);
    m.recordVolume("v", 10, 3);
    m.recordVolume("v", 20, 7);
    CHECK(m.volumes()["v"] == std::vector<TimedValue> {{10, 3}, {20, 7}});
}

TEST_CASE("volume history of a job shows the staircase and the drop to 1") {
    TempDir tmp;
    FleetConfig fc;
    fc.workers = 7;
    fc.threadsPerProcess = 1;
    fc.deterministicSeed = 1;
    fc.conflictsPerStep = 8;
    Fleet fleet(fc);
    fleet.submit("stairs", {0, oracle::pigeonhole(11, 10), {}, 110});
    fleet.advance(1100);
    REQUIRE(fleet.cancel("stairs"));
    fleet.advance(20);
    emitMetrics(fleet.metrics(), tmp.path());
    auto v = readVolumeCsv(tmp.path() / "volume_stairs.csv");
    std::vector<int> vols;
    for (auto& e : v) vols.push_back(e.value);
    CHECK(vols == std::vector<int> {1, 3, 7, 1});
    CHECK(fs::exists(tmp.path() / "volume_stairs.svg"));
    auto calls = readCallsCsv(tmp.path() / "calls.csv");
    REQUIRE(calls.size() == 1);
    CHECK(calls[0].verdict == Verdict::UNKNOWN);
}
