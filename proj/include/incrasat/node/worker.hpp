#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <set>
#include <vector>

#include "incrasat/node/messages.hpp"
#include "incrasat/revision/lifecycle.hpp"
#include "incrasat/sat/portfolio.hpp"
#include "incrasat/transport/transport.hpp"

namespace incrasat {

struct WorkerConfig {
    int threadsPerProcess {3};
    bool threaded {true};
    bool sharing {true};
    double sharingPeriodMs {500};
    size_t sharingBudget {sat::kDefaultSharingBudget};
    size_t sharedClauseMaxLen {sat::kDefaultSharedClauseMaxLen};
    uint64_t seed {0};
    int64_t conflictsPerStep {64};
    int coordinatorRank {0};
};

/// Times a node started solving revision r before all of P_0..P_r arrived.
/// Must stay zero.
uint64_t prematureSolveStarts();

/// The job tree nodes hosted on one rank: payload bookkeeping, the solver
/// portfolios, and the per-node part of the clause sharing epochs.
class Worker {
public:
    struct Totals {
        uint64_t imported {0};
        uint64_t deferredBatches {0};
        uint64_t droppedDeferred {0};
        uint64_t epochs {0};
        uint64_t resultsSent {0};
    };

    Worker(int rank, Transport& transport, WorkerConfig config);
    ~Worker();

    int rank() const { return _rank; }

    /// Handles one logical (reassembled) envelope addressed to a job node.
    /// Returns true if a node was newly scheduled on this rank.
    bool handle(const Envelope& env, double nowMs);
    /// Advances solving, payload forwarding and sharing of every node.
    void step(double nowMs);

    /// Wakes this rank's loop when a solver thread finishes.
    void setWakeCallback(std::function<void()> cb) { _wake = std::move(cb); }

    size_t nodeCount() const { return _nodes.size(); }
    const revision::JobNode* node(uint64_t job, uint32_t index) const;
    /// Revision the node is currently solving, -1 if idle.
    int64_t solvingRevision(uint64_t job, uint32_t index) const;
    Totals totals() const;

private:
    struct Epoch {
        uint64_t id {0};
        int replyTo {-1};
        uint32_t parentIndex {0};
        sat::AggregatedBatch acc;
        std::set<uint32_t> pending;
    };
    struct Runtime {
        Runtime(uint64_t job, uint32_t index) : node(job, index) {}
        revision::JobNode node;
        std::unique_ptr<sat::Portfolio> portfolio;
        int64_t solving {-1};
        int64_t reported {-1};
        // Sharing; only one epoch is open per node at any time.
        std::optional<Epoch> epoch;
        uint64_t nextEpochId {1};
        double nextEpochMs {-1};
    };
    using Key = std::pair<uint64_t, uint32_t>;

    Runtime& obtain(uint64_t job, uint32_t index);
    Runtime* find(uint64_t job, uint32_t index);
    void stopSolving(Runtime& rt);
    void advance(Runtime& rt, double nowMs);
    void sendAll(std::vector<Envelope> envs);
    void send(Tag tag, int dest, std::vector<uint8_t> body);

    void onClauseBatch(const Envelope& env);
    sat::AggregatedBatch ownContribution(Runtime& rt);
    void openEpoch(Runtime& rt, uint64_t id, int replyTo, uint32_t parentIndex, double nowMs);
    void closeEpoch(Runtime& rt);
    void broadcast(Runtime& rt, uint64_t id, const sat::AggregatedBatch& batch);

    int _rank;
    Transport& _transport;
    WorkerConfig _config;
    ChunkingSender _sender;
    std::map<Key, Runtime> _nodes;
    std::function<void()> _wake;
    Totals _retired;
    uint64_t _epochs {0};
    uint64_t _resultsSent {0};
};

} // namespace incrasat
