#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <thread>

#include <sys/prctl.h>
#include <sys/wait.h>
#include <unistd.h>

#include "CLI11.hpp"

#include "incrasat/bridge/daemon.hpp"
#include "incrasat/bridge/ipasir_session.hpp"
#include "incrasat/harness/counter.hpp"
#include "incrasat/harness/icnf.hpp"
#include "incrasat/harness/metrics.hpp"
#include "incrasat/harness/platform.hpp"
#include "incrasat/harness/run_config.hpp"
#include "incrasat/transport/socket_transport.hpp"

using namespace incrasat;
namespace fs = std::filesystem;

namespace {

volatile std::sig_atomic_t g_signal = 0;

void onSignal(int sig) { g_signal = sig; }

void installSignalHandlers() {
    struct sigaction sa {};
    sa.sa_handler = onSignal;
    sigemptyset(&sa.sa_mask);
    sigaction(SIGINT, &sa, nullptr);
    sigaction(SIGTERM, &sa, nullptr);
}

// Fleet options shared by all subcommands that may start a fleet.
struct FleetOptions {
    std::string configFile;
    std::optional<int> workers, threads;
    std::optional<double> growthMs, sharingMs;
    std::optional<bool> sharing;
    std::optional<std::string> submissionDir, metricsDir, transport, socketDir;
    std::optional<uint64_t> deterministicSeed, seed;

    void attach(CLI::App* app) {
        app->add_option("--config", configFile, "key=value configuration file")->check(CLI::ExistingFile);
        app->add_option("--workers", workers, "number of worker ranks");
        app->add_option("--threads", threads, "solver threads per rank");
        app->add_option("--growth-ms", growthMs, "demand growth interval");
        app->add_option("--sharing-ms", sharingMs, "clause sharing period");
        app->add_option("--sharing", sharing, "clause sharing on/off");
        app->add_option("--submission-dir", submissionDir, "watched submission directory");
        app->add_option("--metrics-dir", metricsDir, "where calls.csv and volume CSVs go");
        app->add_option("--transport", transport, "socket or loopback");
        app->add_option("--socket-dir", socketDir, "directory for the rank sockets");
        app->add_option("--deterministic-seed", deterministicSeed, "simulate on virtual time with this seed");
        app->add_option("--seed", seed, "solver diversification seed");
    }

    harness::RunConfig resolve() const {
        harness::RunConfig rc;
        if (!configFile.empty()) rc.loadFile(configFile);
        if (workers) rc.workers = *workers;
        if (threads) rc.threadsPerProcess = *threads;
        if (growthMs) rc.growthIntervalMs = *growthMs;
        if (sharingMs) rc.sharingPeriodMs = *sharingMs;
        if (sharing) rc.sharing = *sharing;
        if (submissionDir) {
            rc.submissionDir = *submissionDir;
            if (!socketDir && configFile.empty()) rc.socketDir = rc.submissionDir / "sockets";
        }
        if (metricsDir) rc.metricsDir = *metricsDir;
        if (transport) rc.set("transport", *transport);
        if (socketDir) rc.socketDir = *socketDir;
        if (deterministicSeed) rc.deterministicSeed = *deterministicSeed;
        if (seed) rc.seed = *seed;
        rc.validate();
        return rc;
    }
};

void writeMetrics(Fleet& fleet, const fs::path& dir, bool plots) {
    if (plots) {
        for (auto& f : harness::emitMetrics(fleet.metrics(), dir)) std::cout << "wrote " << f.string() << "\n";
    } else {
        fleet.metrics().writeCsv(dir);
    }
}

// Runs until a signal or the duration passed; deterministic fleets are
// driven here with virtual time paced to the wall clock.
void serve(Fleet& fleet, double durationS, const fs::path& metricsDir) {
    auto start = std::chrono::steady_clock::now();
    auto lastFlush = start;
    while (!g_signal) {
        auto now = std::chrono::steady_clock::now();
        double elapsedMs = std::chrono::duration<double, std::milli>(now - start).count();
        if (durationS > 0 && elapsedMs >= durationS * 1000) break;
        if (fleet.deterministic()) {
            if (fleet.now() < elapsedMs) fleet.advance(1);
            else std::this_thread::sleep_for(std::chrono::microseconds(200));
        } else {
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
        if (now - lastFlush > std::chrono::seconds(1)) {
            writeMetrics(fleet, metricsDir, false);
            lastFlush = now;
        }
    }
}

int fleetRun(const harness::RunConfig& rc, double durationS) {
    fs::create_directories(rc.submissionDir);
    installSignalHandlers();
    auto fc = rc.fleetConfig();
    std::vector<pid_t> children;

    if (fc.transport == TransportKind::SOCKET && !fc.deterministicSeed) {
        fs::create_directories(fc.socketDir);
        auto live = SocketTransport::findConflicts(fc.socketDir, fc.workers);
        if (!live.empty()) {
            std::cerr << "error: socket paths already in use:";
            for (auto& p : live) std::cerr << " " << p.string();
            std::cerr << "\n";
            return 1;
        }
        // Fork before any thread exists.
        pid_t parent = ::getpid();
        for (int r = 1; r < fc.workers; r++) {
            pid_t pid = ::fork();
            if (pid < 0) {
                std::perror("fork");
                return 1;
            }
            if (pid == 0) {
                ::prctl(PR_SET_PDEATHSIG, SIGTERM);
                if (::getppid() != parent) ::_exit(0);
                try {
                    auto child = fc;
                    child.onlyRank = r;
                    Fleet fleet(child);
                    fleet.start();
                    while (!g_signal) std::this_thread::sleep_for(std::chrono::milliseconds(50));
                    fleet.stop();
                } catch (const std::exception& e) {
                    std::cerr << "rank " << r << ": " << e.what() << "\n";
                    ::_exit(1);
                }
                ::_exit(0);
            }
            children.push_back(pid);
        }
        fc.onlyRank = 0;
    }

    int rc0 = 0;
    try {
        Fleet fleet(fc);
        auto daemon = bridge::attachDaemon(fleet, rc.daemonConfig());
        fleet.start();
        std::cout << "fleet running: " << fc.workers << " worker(s), " << fc.threadsPerProcess
                  << " solver thread(s) each, submissions in " << rc.submissionDir.string()
                  << (fc.deterministicSeed ? ", deterministic" : "") << std::endl;
        serve(fleet, durationS, rc.metricsDir);
        fleet.stop();
        daemon->stop();
        writeMetrics(fleet, rc.metricsDir, true);
        for (auto& a : daemon->audit()) std::cerr << "audit: " << a << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        rc0 = 1;
    }
    for (pid_t c : children) ::kill(c, SIGTERM);
    for (pid_t c : children) ::waitpid(c, nullptr, 0);
    return rc0;
}

// Client side: an external daemon via the api dir, or an in-process one.
struct ClientContext {
    std::unique_ptr<harness::LocalPlatform> platform;
    fs::path apiDir;
    fs::path metricsDir;
    std::optional<fs::path> scratch;

    ClientContext(bool local, const std::optional<std::string>& apiDirOpt, const FleetOptions& fo) {
        if (!local) {
            apiDir = apiDirOpt ? fs::path(*apiDirOpt) : bridge::defaultApiDir();
            return;
        }
        auto rc = fo.resolve();
        if (apiDirOpt) {
            apiDir = *apiDirOpt;
        } else {
            std::string tmpl = (fs::temp_directory_path() / "incrasat_local_XXXXXX").string();
            if (!::mkdtemp(tmpl.data())) throw std::runtime_error("cannot create a scratch directory");
            apiDir = tmpl;
            scratch = apiDir;
        }
        fs::create_directories(apiDir);
        rc.submissionDir = apiDir;
        rc.transport = TransportKind::LOOPBACK;
        rc.deterministicSeed.reset();
        metricsDir = fo.metricsDir ? fs::path(*fo.metricsDir) : fs::path();
        platform = std::make_unique<harness::LocalPlatform>(rc.fleetConfig(), rc.daemonConfig());
    }

    ~ClientContext() {
        if (platform) {
            platform->stop();
            if (!metricsDir.empty()) writeMetrics(platform->fleet(), metricsDir, true);
        }
        platform.reset();
        std::error_code ec;
        if (scratch) fs::remove_all(*scratch, ec);
    }
};

const char* verdictName(int code) {
    return code == 10 ? "SAT" : code == 20 ? "UNSAT" : "UNKNOWN";
}

int submitIcnf(const std::string& file, ClientContext& ctx) {
    auto problem = harness::parseIcnfFile(file);
    bridge::IpasirSession session(ctx.apiDir);
    for (size_t r = 0; r < problem.increments.size(); r++) {
        auto& inc = problem.increments[r];
        for (auto& c : inc.clauses) {
            for (auto l : c) session.add(l);
            session.add(0);
        }
        for (auto a : inc.assumptions) session.assume(a);
        int code = session.solve();
        std::printf("revision %zu: %s (%.3f ms)\n", r, verdictName(code), session.lastTurnaroundMs());
        std::fflush(stdout);
    }
    session.release();
    return 0;
}

int counterApp(int bits, ClientContext& ctx) {
    bridge::IpasirSession session(ctx.apiDir);
    int sat = 0, unsat = 0;
    harness::runCounterApp(bits, session, [&](uint32_t k) {
        auto st = session.state();
        int code = st == bridge::IpasirSession::State::SAT ? 10 : st == bridge::IpasirSession::State::UNSAT ? 20 : 0;
        (code == 10 ? sat : unsat) += code != 0;
        std::printf("revision %u: %s (%.3f ms)\n", k, verdictName(code), session.lastTurnaroundMs());
        std::fflush(stdout);
    });
    session.release();
    std::printf("%d UNSAT, %d SAT\n", unsat, sat);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app {"Distributed incremental SAT solving on one machine"};
    app.require_subcommand(1);

    auto* fleet = app.add_subcommand("fleet", "run the worker fleet");
    fleet->require_subcommand(1);
    auto* fleetRunCmd = fleet->add_subcommand("run", "start W workers and watch the submission directory");
    FleetOptions fleetOpts;
    fleetOpts.attach(fleetRunCmd);
    double duration = 0;
    fleetRunCmd->add_option("--duration-s", duration, "stop after this many seconds (default: until signal)");

    auto* submit = app.add_subcommand("submit", "submit an incremental CNF file, one revision per increment");
    std::string icnfFile;
    submit->add_option("file", icnfFile, "incremental CNF file")->required()->check(CLI::ExistingFile);

    auto* counter = app.add_subcommand("counter", "binary counter reachability, one revision per step bound");
    int bits = 3;
    counter->add_option("--bits", bits, "counter width")->check(CLI::Range(1, 16));

    FleetOptions clientOpts;
    std::optional<std::string> apiDir;
    bool local = false;
    for (auto* cmd : {submit, counter}) {
        cmd->add_option("--api-dir", apiDir, "submission directory of the running fleet");
        cmd->add_flag("--local", local, "start an in-process fleet for this run");
        clientOpts.attach(cmd);
    }

    auto* metrics = app.add_subcommand("metrics", "metrics of a fleet run");
    metrics->require_subcommand(1);
    auto* emit = metrics->add_subcommand("emit", "render plots from the CSV files");
    std::string metricsDir = "metrics";
    emit->add_option("--metrics-dir", metricsDir, "directory with calls.csv");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fleetRunCmd->parsed()) return fleetRun(fleetOpts.resolve(), duration);
        if (submit->parsed() || counter->parsed()) {
            ClientContext ctx(local, apiDir, clientOpts);
            if (submit->parsed()) return submitIcnf(icnfFile, ctx);
            return counterApp(bits, ctx);
        }
        if (emit->parsed()) {
            if (!fs::exists(fs::path(metricsDir) / "calls.csv")) {
                std::cerr << "error: no calls.csv in " << metricsDir << "\n";
                return 1;
            }
            for (auto& f : harness::renderPlots(metricsDir)) std::cout << "wrote " << f.string() << "\n";
            return 0;
        }
    } catch (const harness::IcnfError& e) {
        std::cerr << icnfFile << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
