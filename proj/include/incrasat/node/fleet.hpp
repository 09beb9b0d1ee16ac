#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "incrasat/harness/metrics.hpp"
#include "incrasat/node/coordinator.hpp"
#include "incrasat/node/worker.hpp"
#include "incrasat/sched/scheduling.hpp"
#include "incrasat/transport/loopback_transport.hpp"

namespace incrasat {

enum class TransportKind : uint8_t { LOOPBACK, SOCKET };

struct FleetConfig {
    int workers {1};
    int threadsPerProcess {3};
    double growthIntervalMs {500};
    double sharingPeriodMs {500};
    bool sharing {true};
    size_t sharedClauseMaxLen {sat::kDefaultSharedClauseMaxLen};
    size_t sharingBudget {sat::kDefaultSharingBudget};
    double pollMinMs {1};
    double pollMaxMs {10};
    double pollGrowth {1.3};
    uint64_t seed {0};
    // Set: single-threaded simulation on virtual time over the loopback
    // transport; solvers advance by conflictsPerStep per rank iteration.
    std::optional<uint64_t> deterministicSeed;
    double maxDelayMs {0};
    int64_t conflictsPerStep {64};
    TransportKind transport {TransportKind::LOOPBACK};
    std::filesystem::path socketDir;
    // -1: this process runs every rank. Otherwise only the given rank
    // (socket transport, one process per rank).
    int onlyRank {-1};
};

/// Main loop of one rank: drains the inbox, feeds the coordinator (on the
/// coordinator rank) and the local job nodes, and runs the loop hooks.
class RankLoop {
public:
    RankLoop(int rank, Transport& transport, WorkerConfig config, Coordinator* coordinator,
             double pollMin, double pollMax, double pollGrowth);

    /// One iteration; returns the time until the next one.
    double iterate(double nowMs);
    int rank() const { return _rank; }
    Worker& worker() { return _worker; }
    void addHook(std::function<void(double)> hook) { _hooks.push_back(std::move(hook)); }
    Worker::Totals totals() const;
    double pollInterval() const { return _poll.current(); }

private:
    int _rank;
    Transport& _transport;
    Worker _worker;
    Coordinator* _coordinator;
    ChunkAssembler _assembler;
    sched::PollInterval _poll;
    std::vector<std::function<void(double)>> _hooks;
    mutable std::mutex _statsMtx;
    Worker::Totals _snapshot;
};

/// W ranks with their transport, the coordinator on rank 0 and the
/// programmatic client API.
class Fleet {
public:
    explicit Fleet(FleetConfig config);
    ~Fleet();
    Fleet(const Fleet&) = delete;
    Fleet& operator=(const Fleet&) = delete;

    const FleetConfig& config() const { return _config; }
    bool deterministic() const { return _config.deterministicSeed.has_value(); }
    /// Milliseconds since start (virtual in deterministic mode).
    double now() const;

    bool hasCoordinator() const { return _coordinator != nullptr; }
    Coordinator& coordinator() { return *_coordinator; }
    harness::MetricsRecorder& metrics() { return _metrics; }
    LoopbackTransport* loopback() { return _loopback.get(); }
    Transport& transportOf(int rank);

    /// Runs at the end of every rank-0 iteration, on the rank-0 loop.
    /// Register before start().
    void addRank0Hook(std::function<void(double)> hook);
    /// Threaded mode: launches the rank loops. No-op when deterministic.
    void start();
    void stop();
    void wake(int rank);

    void submit(const std::string& name, RevisionPayload payload);
    bool cancel(const std::string& name);
    void finalize(const std::string& name);
    /// Waits (virtual time in deterministic mode) for the conclusion.
    std::optional<Conclusion> awaitResult(const std::string& name, uint32_t revision, double timeoutMs);

    /// Deterministic mode: simulates `ms` of virtual time. Threaded: sleeps.
    void advance(double ms);
    /// Deterministic mode: simulates until `done` holds or the timeout.
    bool runUntil(const std::function<bool()>& done, double timeoutMs);

    Worker::Totals workerTotals() const;
    RankLoop& rankLoop(int rank);

private:
    void simulateStep();
    void threadMain(RankLoop& loop);

    FleetConfig _config;
    harness::MetricsRecorder _metrics;
    std::unique_ptr<LoopbackTransport> _loopback;
    std::vector<std::unique_ptr<Transport>> _sockets;
    std::unique_ptr<Coordinator> _coordinator;
    std::vector<std::unique_ptr<RankLoop>> _loops;
    std::vector<std::thread> _threads;
    std::atomic_bool _stop {false};
    bool _started {false};

    // Deterministic simulation state.
    double _virtualNow {0};
    std::vector<double> _nextPoll;
    std::chrono::steady_clock::time_point _epoch;
};

} // namespace incrasat
