#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "incrasat/model/types.hpp"
#include "incrasat/sat/sharing.hpp"

namespace incrasat::sat {

enum class PhaseInit : uint8_t { ALL_FALSE, ALL_TRUE, RANDOM };

struct SolverConfig {
    uint64_t seed {0};
    PhaseInit phaseInit {PhaseInit::ALL_FALSE};
    // Luby unit in conflicts.
    int restartInterval {100};
    double varDecay {0.95};
    bool importEnabled {true};
    size_t maxSharedLength {kDefaultSharedClauseMaxLen};
};

/// Distinct (seed, phase, restart interval) per portfolio thread.
SolverConfig diversifiedConfig(uint64_t baseSeed, int threadIndex);

struct SolveLimits {
    // Negative: unlimited.
    int64_t conflictBudget {-1};
    // Polled at every restart and every 4096 propagations.
    std::function<bool()> terminate;
};

class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Count of batches that reached the clause ingestion point although their
/// max revision was ahead of the importing solver. Must stay zero.
uint64_t revisionSafetyViolations();

struct ClauseHash {
    size_t operator()(const Clause& c) const noexcept;
};

/// Incremental CDCL solver. Original clauses are exactly the union of the
/// ingested payloads; learned and imported clauses are consequences of them.
class CdclSolver {
public:
    struct Stats {
        uint64_t conflicts {0};
        uint64_t decisions {0};
        uint64_t propagations {0};
        uint64_t restarts {0};
        uint64_t imported {0};
        uint64_t deferredBatches {0};
        uint64_t droppedDeferred {0};
        uint64_t selfSkipped {0};
    };

    explicit CdclSolver(SolverConfig config = {});

    const SolverConfig& config() const { return _config; }
    const Stats& stats() const { return _stats; }
    uint32_t numVars() const { return _numVars; }
    /// -1 before the first payload was ingested.
    int64_t currentRevision() const { return _revision; }

    /// Adds the clauses of the next revision. Throws ProtocolError if the
    /// payload is not the successor of the current revision and
    /// ValidationError for literals beyond the payload's max_var.
    void ingest(const RevisionPayload& payload);

    SolveOutcome solve(std::span<const Literal> assumptions, const SolveLimits& limits = {});
    Verdict lastVerdict() const { return _lastVerdict; }
    /// Subset of the last call's assumptions that suffices for
    /// unsatisfiability (empty if the clauses alone are unsatisfiable).
    /// Throws ContractError unless the last solve returned UNSAT.
    std::vector<Literal> failedAssumptions() const;

    /// Recently learned clauses of length <= maxSharedLength, shortest first
    /// within `budgetLiterals`; the batch is stamped with the current revision.
    SharedClauseBatch exportClauses(size_t budgetLiterals);
    /// Receives each shareable learned clause instead of the internal export
    /// buffer; called from within solve().
    void setLearnedClauseCallback(std::function<void(const Clause&)> cb) { _learnedCallback = std::move(cb); }
    /// Called at the start of every solve and after every restart, at
    /// decision level 0, so that offerBatch() may be used from it.
    void setRestartHook(std::function<void()> hook) { _restartHook = std::move(hook); }

    /// Applies the revision gate to an incoming batch: admissible clauses are
    /// ingested as learned clauses, future batches are kept (at most the 4
    /// most recent) and retried once the solver reaches their revision.
    /// Must be called at decision level 0. Returns the number of clauses added.
    size_t offerBatch(const AggregatedBatch& batch);
    size_t deferredBatchCount() const { return _deferred.size(); }

private:
    using Lit = uint32_t;
    static constexpr uint32_t kNoReason = UINT32_MAX;
    static constexpr Lit kUndefLit = UINT32_MAX;
    static constexpr size_t kMaxDeferred = 4;

    struct ClauseRecord {
        std::vector<Lit> lits;
        float activity {0};
        bool learnt {false};
        bool deleted {false};
    };
    struct Watch {
        uint32_t cref;
        Lit blocker;
    };

    static Lit toLit(Literal ext) {
        return 2 * (variableOf(ext) - 1) + (ext < 0 ? 1 : 0);
    }
    static Literal toExt(Lit l) {
        auto v = static_cast<Literal>(l / 2 + 1);
        return (l & 1) ? -v : v;
    }
    static Lit neg(Lit l) { return l ^ 1; }
    static uint32_t var(Lit l) { return l >> 1; }

    int8_t value(Lit l) const {
        int8_t v = _assigns[var(l)];
        return (l & 1) ? static_cast<int8_t>(-v) : v;
    }
    int decisionLevel() const { return static_cast<int>(_trailLim.size()); }

    void reserveVars(uint32_t n);
    bool addClauseAtRoot(std::vector<Literal> lits, bool learnt);
    void attach(uint32_t cref);
    void enqueue(Lit l, uint32_t reason);
    uint32_t propagate();
    void analyze(uint32_t confl, std::vector<Lit>& out, int& btLevel);
    void analyzeFinal(Lit p);
    void cancelUntil(int level);
    Lit pickBranchLit();
    void newDecisionLevel() { _trailLim.push_back(_trail.size()); }
    void learn(const std::vector<Lit>& clause);
    void reduceDb();
    bool locked(uint32_t cref) const;
    void bumpVar(uint32_t v);
    void bumpClause(ClauseRecord& c);
    bool shouldStop(const SolveLimits& limits);
    int searchRound(int64_t maxConflicts, const SolveLimits& limits);
    void importClauses(const std::vector<Clause>& clauses, uint32_t batchRevision);
    void retryDeferred();

    // Activity-ordered heap of variables.
    bool heapLess(uint32_t a, uint32_t b) const { return _activity[a] > _activity[b]; }
    void heapInsert(uint32_t v);
    void heapUp(size_t i);
    void heapDown(size_t i);
    uint32_t heapPop();

    SolverConfig _config;
    std::mt19937_64 _rng;
    Stats _stats;
    uint32_t _numVars {0};
    int64_t _revision {-1};
    bool _rootUnsat {false};

    std::vector<ClauseRecord> _clauses;
    size_t _numLearnts {0};
    std::vector<std::vector<Watch>> _watches;
    std::vector<int8_t> _assigns;
    std::vector<uint8_t> _phase;
    std::vector<int> _level;
    std::vector<uint32_t> _reason;
    std::vector<uint8_t> _seen;
    std::vector<Lit> _trail;
    std::vector<size_t> _trailLim;
    size_t _qhead {0};

    std::vector<double> _activity;
    double _varInc {1};
    double _claInc {1};
    std::vector<uint32_t> _heap;
    std::vector<int> _heapIndex;

    double _maxLearnts {0};
    uint64_t _nextTerminateCheck {0};

    std::vector<Lit> _assumptions;
    Verdict _lastVerdict {Verdict::UNKNOWN};
    std::vector<Literal> _failed;
    bool _stopRequested {false};

    std::vector<Clause> _exportCandidates;
    std::unordered_set<Clause, ClauseHash> _ownExports;
    std::function<void(const Clause&)> _learnedCallback;
    std::function<void()> _restartHook;
    std::deque<AggregatedBatch> _deferred;
};

} // namespace incrasat::sat
