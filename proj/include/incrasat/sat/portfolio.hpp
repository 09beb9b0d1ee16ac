#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "incrasat/sat/cdcl_solver.hpp"

namespace incrasat::sat {

struct PortfolioConfig {
    int threads {3};
    uint64_t seed {0};
    // false: solvers are advanced explicitly by poll() (deterministic runs).
    bool threaded {true};
    bool importEnabled {true};
    size_t maxSharedLength {kDefaultSharedClauseMaxLen};
    // Stepped mode: conflicts per solver per poll().
    int64_t conflictsPerStep {64};
    // Threaded mode: nice value of the solver threads, so that the main
    // loops of all ranks stay responsive on a loaded machine.
    int niceness {10};
    // Threaded mode: called from a solver thread once poll() has news.
    std::function<void()> onFinish;
};

/// K diversified incremental solvers working on the same revision of one
/// job tree node. The first conclusive result wins.
/// Learned clauses leave each solver through a locked export buffer and
/// shared batches enter through a locked import queue that the solver drains
/// at each restart (decision level 0).
class Portfolio {
public:
    struct Totals {
        uint64_t conflicts {0};
        uint64_t imported {0};
        uint64_t deferredBatches {0};
        uint64_t droppedDeferred {0};
        uint64_t selfSkipped {0};
    };

    explicit Portfolio(PortfolioConfig config);
    ~Portfolio();
    Portfolio(const Portfolio&) = delete;
    Portfolio& operator=(const Portfolio&) = delete;

    const PortfolioConfig& config() const { return _config; }
    int64_t revision() const { return _revision; }

    /// Interrupts a running solve, then ingests the next revision everywhere.
    void ingest(const RevisionPayload& payload);
    /// Starts solving the current revision under `assumptions`.
    void start(std::vector<Literal> assumptions);
    bool running() const { return _running; }
    /// Conclusive outcome of the running solve, once available. In stepped
    /// mode this advances every solver by one conflict budget.
    std::optional<SolveOutcome> poll();
    /// Stops the running solve and waits until every solver is idle.
    void interrupt();

    /// Takes the clauses learned since the last call, all solvers together.
    std::vector<Clause> drainExports();
    /// Queues a shared batch for every solver.
    void offer(const AggregatedBatch& batch);

    Totals totals() const;

private:
    static constexpr size_t kMaxExportBuffer = 4096;
    static constexpr size_t kMaxImportQueue = 8;

    struct Slot {
        explicit Slot(SolverConfig c) : solver(c) {}
        CdclSolver solver;
        std::mutex bufferMtx;
        std::vector<Clause> exports;
        std::deque<AggregatedBatch> imports;
        CdclSolver::Stats lastStats;
        std::thread thread;
    };

    void threadMain(Slot& slot);
    void drainImports(Slot& slot);
    void waitIdle(std::unique_lock<std::mutex>& lock);
    SolveOutcome trimmed(SolveOutcome out) const;

    PortfolioConfig _config;
    std::vector<std::unique_ptr<Slot>> _slots;
    int64_t _revision {-1};
    uint32_t _maxVar {0};
    bool _running {false};

    // Threaded-mode control.
    mutable std::mutex _ctlMtx;
    std::condition_variable _taskCv;
    std::condition_variable _idleCv;
    uint64_t _generation {0};
    bool _shutdown {false};
    int _busy {0};
    std::atomic_bool _stop {false};
    std::vector<Literal> _assumptions;
    std::optional<SolveOutcome> _result;
};

} // namespace incrasat::sat
