#include "incrasat/sat/cdcl_solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>

namespace incrasat::sat {

namespace {

std::atomic<uint64_t> g_revisionViolations {0};

double luby(double y, int x) {
    int size = 1, seq = 0;
    while (size < x + 1) {
        seq++;
        size = 2 * size + 1;
    }
    while (size - 1 != x) {
        size = (size - 1) >> 1;
        seq--;
        x = x % size;
    }
    return std::pow(y, seq);
}

} // namespace

uint64_t revisionSafetyViolations() { return g_revisionViolations.load(); }

size_t ClauseHash::operator()(const Clause& c) const noexcept {
    uint64_t h = 1469598103934665603ull;
    for (Literal l : c) {
        h ^= static_cast<uint32_t>(l);
        h *= 1099511628211ull;
    }
    return static_cast<size_t>(h);
}

SolverConfig diversifiedConfig(uint64_t baseSeed, int threadIndex) {
    static constexpr PhaseInit phases[] = {PhaseInit::ALL_FALSE, PhaseInit::ALL_TRUE, PhaseInit::RANDOM};
    static constexpr int restarts[] = {100, 60, 160, 80};
    static constexpr double decays[] = {0.95, 0.92, 0.97, 0.9};
    SolverConfig c;
    c.seed = baseSeed * 1000003ull + static_cast<uint64_t>(threadIndex) * 7919ull + 1;
    c.phaseInit = phases[threadIndex % 3];
    c.restartInterval = restarts[threadIndex % 4] + 10 * (threadIndex / 4);
    c.varDecay = decays[threadIndex % 4];
    return c;
}

CdclSolver::CdclSolver(SolverConfig config) : _config(config), _rng(config.seed) {}

void CdclSolver::reserveVars(uint32_t n) {
    if (n <= _numVars) return;
    uint32_t old = _numVars;
    _numVars = n;
    _watches.resize(2 * static_cast<size_t>(n));
    _assigns.resize(n, 0);
    _level.resize(n, 0);
    _reason.resize(n, kNoReason);
    _seen.resize(n, 0);
    _activity.resize(n, 0);
    _heapIndex.resize(n, -1);
    _phase.resize(n, 0);
    std::uniform_real_distribution<double> jitter(0, 1e-5);
    for (uint32_t v = old; v < n; v++) {
        switch (_config.phaseInit) {
        case PhaseInit::ALL_FALSE: _phase[v] = 0; break;
        case PhaseInit::ALL_TRUE: _phase[v] = 1; break;
        case PhaseInit::RANDOM: _phase[v] = static_cast<uint8_t>(_rng() & 1); break;
        }
        _activity[v] = jitter(_rng);
        heapInsert(v);
    }
}

void CdclSolver::heapInsert(uint32_t v) {
    if (_heapIndex[v] >= 0) return;
    _heapIndex[v] = static_cast<int>(_heap.size());
    _heap.push_back(v);
    heapUp(_heap.size() - 1);
}

void CdclSolver::heapUp(size_t i) {
    uint32_t v = _heap[i];
    while (i > 0) {
        size_t parent = (i - 1) / 2;
        if (!heapLess(v, _heap[parent])) break;
        _heap[i] = _heap[parent];
        _heapIndex[_heap[i]] = static_cast<int>(i);
        i = parent;
    }
    _heap[i] = v;
    _heapIndex[v] = static_cast<int>(i);
}

void CdclSolver::heapDown(size_t i) {
    uint32_t v = _heap[i];
    while (2 * i + 1 < _heap.size()) {
        size_t child = 2 * i + 1;
        if (child + 1 < _heap.size() && heapLess(_heap[child + 1], _heap[child])) child++;
        if (!heapLess(_heap[child], v)) break;
        _heap[i] = _heap[child];
        _heapIndex[_heap[i]] = static_cast<int>(i);
        i = child;
    }
    _heap[i] = v;
    _heapIndex[v] = static_cast<int>(i);
}

uint32_t CdclSolver::heapPop() {
    uint32_t top = _heap[0];
    _heapIndex[top] = -1;
    _heap[0] = _heap.back();
    _heap.pop_back();
    if (!_heap.empty()) {
        _heapIndex[_heap[0]] = 0;
        heapDown(0);
    }
    return top;
}

void CdclSolver::bumpVar(uint32_t v) {
    _activity[v] += _varInc;
    if (_activity[v] > 1e100) {
        for (auto& a : _activity) a *= 1e-100;
        _varInc *= 1e-100;
    }
    if (_heapIndex[v] >= 0) heapUp(static_cast<size_t>(_heapIndex[v]));
}

void CdclSolver::bumpClause(ClauseRecord& c) {
    c.activity += static_cast<float>(_claInc);
    if (c.activity > 1e20f) {
        for (auto& rec : _clauses)
            if (rec.learnt) rec.activity *= 1e-20f;
        _claInc *= 1e-20;
    }
}

void CdclSolver::attach(uint32_t cref) {
    auto& c = _clauses[cref];
    _watches[c.lits[0]].push_back({cref, c.lits[1]});
    _watches[c.lits[1]].push_back({cref, c.lits[0]});
}

void CdclSolver::enqueue(Lit l, uint32_t reason) {
    uint32_t v = var(l);
    _assigns[v] = (l & 1) ? -1 : 1;
    _level[v] = decisionLevel();
    _reason[v] = reason;
    _trail.push_back(l);
}

bool CdclSolver::addClauseAtRoot(std::vector<Literal> ext, bool learnt) {
    auto norm = normalizeClause(std::move(ext));
    if (!norm) return true;
    uint32_t maxVar = 0;
    for (Literal l : *norm) maxVar = std::max(maxVar, variableOf(l));
    reserveVars(maxVar);

    std::vector<Lit> lits;
    lits.reserve(norm->size());
    for (Literal e : *norm) {
        Lit l = toLit(e);
        int8_t v = value(l);
        if (v > 0) return true;
        if (v == 0) lits.push_back(l);
    }
    if (lits.empty()) {
        _rootUnsat = true;
        return false;
    }
    if (lits.size() == 1) {
        enqueue(lits[0], kNoReason);
        if (propagate() != kNoReason) _rootUnsat = true;
        return !_rootUnsat;
    }
    uint32_t cref = static_cast<uint32_t>(_clauses.size());
    _clauses.push_back({std::move(lits), static_cast<float>(_claInc), learnt, false});
    if (learnt) _numLearnts++;
    attach(cref);
    return true;
}

uint32_t CdclSolver::propagate() {
    uint32_t confl = kNoReason;
    while (_qhead < _trail.size()) {
        Lit p = _trail[_qhead++];
        Lit falseLit = neg(p);
        auto& ws = _watches[falseLit];
        _stats.propagations++;
        size_t i = 0, j = 0;
        while (i < ws.size()) {
            Watch w = ws[i];
            if (value(w.blocker) > 0) {
                ws[j++] = ws[i++];
                continue;
            }
            auto& c = _clauses[w.cref];
            if (c.deleted) {
                i++;
                continue;
            }
            if (c.lits[0] == falseLit) std::swap(c.lits[0], c.lits[1]);
            i++;
            Lit first = c.lits[0];
            if (first != w.blocker && value(first) > 0) {
                ws[j++] = {w.cref, first};
                continue;
            }
            bool moved = false;
            for (size_t k = 2; k < c.lits.size(); k++) {
                if (value(c.lits[k]) >= 0) {
                    std::swap(c.lits[1], c.lits[k]);
                    _watches[c.lits[1]].push_back({w.cref, first});
                    moved = true;
                    break;
                }
            }
            if (moved) continue;
            ws[j++] = {w.cref, first};
            if (value(first) < 0) {
                confl = w.cref;
                _qhead = _trail.size();
                while (i < ws.size()) ws[j++] = ws[i++];
            } else {
                enqueue(first, w.cref);
            }
        }
        ws.resize(j);
        if (confl != kNoReason) break;
    }
    return confl;
}

void CdclSolver::analyze(uint32_t confl, std::vector<Lit>& out, int& btLevel) {
    int pathC = 0;
    Lit p = kUndefLit;
    out.clear();
    out.push_back(kUndefLit);
    size_t index = _trail.size();
    do {
        auto& c = _clauses[confl];
        if (c.learnt) bumpClause(c);
        for (size_t j = (p == kUndefLit ? 0 : 1); j < c.lits.size(); j++) {
            Lit q = c.lits[j];
            uint32_t v = var(q);
            if (!_seen[v] && _level[v] > 0) {
                bumpVar(v);
                _seen[v] = 1;
                if (_level[v] >= decisionLevel()) pathC++;
                else out.push_back(q);
            }
        }
        while (!_seen[var(_trail[--index])]) {}
        p = _trail[index];
        confl = _reason[var(p)];
        _seen[var(p)] = 0;
        pathC--;
    } while (pathC > 0);
    out[0] = neg(p);

    // Drop literals whose reason is subsumed by the rest of the clause.
    std::vector<Lit> marked(out.begin() + 1, out.end());
    size_t keep = 1;
    for (size_t i = 1; i < out.size(); i++) {
        uint32_t r = _reason[var(out[i])];
        bool redundant = r != kNoReason;
        if (redundant) {
            const auto& rc = _clauses[r].lits;
            for (size_t k = 1; k < rc.size(); k++) {
                uint32_t v = var(rc[k]);
                if (!_seen[v] && _level[v] > 0) {
                    redundant = false;
                    break;
                }
            }
        }
        if (!redundant) out[keep++] = out[i];
    }
    out.resize(keep);
    for (Lit l : marked) _seen[var(l)] = 0;

    btLevel = 0;
    if (out.size() > 1) {
        size_t maxI = 1;
        for (size_t i = 2; i < out.size(); i++)
            if (_level[var(out[i])] > _level[var(out[maxI])]) maxI = i;
        std::swap(out[1], out[maxI]);
        btLevel = _level[var(out[1])];
    }
}

void CdclSolver::analyzeFinal(Lit falsified) {
    _failed.clear();
    _failed.push_back(toExt(falsified));
    if (decisionLevel() > 0) {
        _seen[var(falsified)] = 1;
        for (size_t i = _trail.size(); i-- > _trailLim[0];) {
            uint32_t x = var(_trail[i]);
            if (!_seen[x]) continue;
            if (_reason[x] == kNoReason) {
                _failed.push_back(toExt(_trail[i]));
            } else {
                const auto& c = _clauses[_reason[x]].lits;
                for (size_t j = 1; j < c.size(); j++)
                    if (_level[var(c[j])] > 0) _seen[var(c[j])] = 1;
            }
            _seen[x] = 0;
        }
        _seen[var(falsified)] = 0;
    }
    std::sort(_failed.begin(), _failed.end());
    _failed.erase(std::unique(_failed.begin(), _failed.end()), _failed.end());
}

void CdclSolver::cancelUntil(int level) {
    if (decisionLevel() <= level) return;
    for (size_t i = _trail.size(); i-- > _trailLim[level];) {
        uint32_t v = var(_trail[i]);
        _phase[v] = _assigns[v] > 0;
        _assigns[v] = 0;
        _reason[v] = kNoReason;
        heapInsert(v);
    }
    _qhead = _trailLim[level];
    _trail.resize(_trailLim[level]);
    _trailLim.resize(level);
}

CdclSolver::Lit CdclSolver::pickBranchLit() {
    while (!_heap.empty()) {
        uint32_t v = heapPop();
        if (_assigns[v] == 0) return 2 * v + (_phase[v] ? 0 : 1);
    }
    return kUndefLit;
}

void CdclSolver::learn(const std::vector<Lit>& lits) {
    if (lits.size() == 1) {
        enqueue(lits[0], kNoReason);
    } else {
        uint32_t cref = static_cast<uint32_t>(_clauses.size());
        _clauses.push_back({lits, static_cast<float>(_claInc), true, false});
        _numLearnts++;
        attach(cref);
        enqueue(lits[0], cref);
    }
    if (lits.size() <= _config.maxSharedLength) {
        Clause ext;
        ext.reserve(lits.size());
        for (Lit l : lits) ext.push_back(toExt(l));
        if (auto norm = normalizeClause(std::move(ext))) {
            if (_ownExports.size() > 200000) _ownExports.clear();
            _ownExports.insert(*norm);
            if (_learnedCallback) {
                _learnedCallback(*norm);
            } else {
                if (_exportCandidates.size() >= 20000)
                    _exportCandidates.erase(_exportCandidates.begin(), _exportCandidates.begin() + 10000);
                _exportCandidates.push_back(std::move(*norm));
            }
        }
    }
}

bool CdclSolver::locked(uint32_t cref) const {
    const auto& c = _clauses[cref];
    return value(c.lits[0]) > 0 && _reason[var(c.lits[0])] == cref;
}

void CdclSolver::reduceDb() {
    std::vector<uint32_t> learnts;
    for (uint32_t i = 0; i < _clauses.size(); i++)
        if (_clauses[i].learnt && !_clauses[i].deleted) learnts.push_back(i);
    std::sort(learnts.begin(), learnts.end(),
              [&](uint32_t a, uint32_t b) { return _clauses[a].activity < _clauses[b].activity; });
    for (size_t i = 0; i < learnts.size() / 2; i++) {
        auto& c = _clauses[learnts[i]];
        if (c.lits.size() <= 2 || locked(learnts[i])) continue;
        c.deleted = true;
        std::vector<Lit>().swap(c.lits);
        _numLearnts--;
    }
    _maxLearnts *= 1.1;
}

bool CdclSolver::shouldStop(const SolveLimits& limits) {
    if (_stopRequested) return true;
    if (limits.conflictBudget >= 0 && _stats.conflicts >= static_cast<uint64_t>(limits.conflictBudget)) {
        _stopRequested = true;
    } else if (limits.terminate && _stats.propagations >= _nextTerminateCheck) {
        _nextTerminateCheck = _stats.propagations + 4096;
        if (limits.terminate()) _stopRequested = true;
    }
    return _stopRequested;
}

int CdclSolver::searchRound(int64_t maxConflicts, const SolveLimits& limits) {
    int64_t conflictC = 0;
    std::vector<Lit> learnt;
    while (true) {
        uint32_t confl = propagate();
        if (confl != kNoReason) {
            _stats.conflicts++;
            conflictC++;
            if (decisionLevel() == 0) {
                _rootUnsat = true;
                _failed.clear();
                return -1;
            }
            int bt;
            analyze(confl, learnt, bt);
            cancelUntil(bt);
            learn(learnt);
            _varInc /= _config.varDecay;
            _claInc /= 0.999;
            continue;
        }
        if (conflictC >= maxConflicts || shouldStop(limits)) {
            cancelUntil(0);
            return 0;
        }
        if (static_cast<double>(_numLearnts) - static_cast<double>(_trail.size()) >= _maxLearnts) reduceDb();

        Lit next = kUndefLit;
        while (decisionLevel() < static_cast<int>(_assumptions.size())) {
            Lit a = _assumptions[decisionLevel()];
            int8_t v = value(a);
            if (v > 0) {
                newDecisionLevel();
            } else if (v < 0) {
                analyzeFinal(a);
                return -1;
            } else {
                next = a;
                break;
            }
        }
        if (next == kUndefLit) {
            _stats.decisions++;
            next = pickBranchLit();
            if (next == kUndefLit) return 1;
        }
        newDecisionLevel();
        enqueue(next, kNoReason);
    }
}

SolveOutcome CdclSolver::solve(std::span<const Literal> assumptions, const SolveLimits& limitsIn) {
    auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    };
    SolveLimits limits = limitsIn;
    if (limits.conflictBudget >= 0) limits.conflictBudget += static_cast<int64_t>(_stats.conflicts);

    _failed.clear();
    _lastVerdict = Verdict::UNKNOWN;
    _stopRequested = false;
    cancelUntil(0);
    _assumptions.clear();
    for (Literal a : assumptions) {
        if (a == 0) throw ContractError("zero assumption literal");
        reserveVars(variableOf(a));
        _assumptions.push_back(toLit(a));
    }
    if (_restartHook) _restartHook();
    if (!_rootUnsat && propagate() != kNoReason) _rootUnsat = true;
    if (_rootUnsat) {
        _lastVerdict = Verdict::UNSAT;
        return SolveOutcome::unsat({}, elapsed());
    }
    _maxLearnts = std::max<double>(2000, static_cast<double>(_clauses.size() - _numLearnts) / 3);
    _nextTerminateCheck = _stats.propagations;

    int status = 0;
    for (int round = 0;; round++) {
        if (limits.terminate && limits.terminate()) break;
        if (shouldStop(limits)) break;
        auto maxConflicts = static_cast<int64_t>(luby(2, round) * _config.restartInterval);
        status = searchRound(maxConflicts, limits);
        if (status != 0) break;
        _stats.restarts++;
        if (_restartHook) _restartHook();
        if (_rootUnsat) {
            status = -1;
            _failed.clear();
            break;
        }
    }

    SolveOutcome out;
    if (status > 0) {
        std::vector<Literal> model(_numVars);
        for (uint32_t v = 0; v < _numVars; v++)
            model[v] = _assigns[v] > 0 ? static_cast<Literal>(v + 1) : -static_cast<Literal>(v + 1);
        out = SolveOutcome::sat(std::move(model));
        _lastVerdict = Verdict::SAT;
    } else if (status < 0) {
        out = SolveOutcome::unsat(_failed);
        _lastVerdict = Verdict::UNSAT;
    }
    cancelUntil(0);
    out.wallclockMs = elapsed();
    return out;
}

std::vector<Literal> CdclSolver::failedAssumptions() const {
    if (_lastVerdict != Verdict::UNSAT) throw ContractError("failed assumptions queried without an UNSAT result");
    return _failed;
}

void CdclSolver::ingest(const RevisionPayload& payload) {
    if (static_cast<int64_t>(payload.revision) != _revision + 1)
        throw ProtocolError("solver at revision " + std::to_string(_revision) + " cannot ingest revision "
                            + std::to_string(payload.revision));
    payload.validate();
    cancelUntil(0);
    reserveVars(payload.maxVar);
    for (const auto& c : payload.clauses) addClauseAtRoot(c, false);
    _revision = payload.revision;
    retryDeferred();
}

SharedClauseBatch CdclSolver::exportClauses(size_t budgetLiterals) {
    SharedClauseBatch batch;
    batch.clauses = packShortestFirst(std::move(_exportCandidates), budgetLiterals, _config.maxSharedLength);
    _exportCandidates.clear();
    batch.sourceRevision = static_cast<uint32_t>(std::max<int64_t>(0, _revision));
    return batch;
}

size_t CdclSolver::offerBatch(const AggregatedBatch& batch) {
    if (!_config.importEnabled || batch.clauses.empty()) return 0;
    if (_revision < 0 || batch.maxRevision > _revision) {
        _deferred.push_back(batch);
        _stats.deferredBatches++;
        if (_deferred.size() > kMaxDeferred) {
            _deferred.pop_front();
            _stats.droppedDeferred++;
        }
        return 0;
    }
    auto decision = importFilter(batch, static_cast<uint32_t>(_revision));
    size_t before = _stats.imported;
    importClauses(decision.admissible, batch.maxRevision);
    return _stats.imported - before;
}

void CdclSolver::importClauses(const std::vector<Clause>& clauses, uint32_t batchRevision) {
    // Ingestion point of the revision invariant.
    if (_revision < 0 || static_cast<int64_t>(batchRevision) > _revision) {
        g_revisionViolations++;
        return;
    }
    if (decisionLevel() != 0) throw ContractError("clauses can only be imported at decision level 0");
    for (const auto& c : clauses) {
        if (_rootUnsat) break;
        if (_ownExports.count(c)) {
            _stats.selfSkipped++;
            continue;
        }
        addClauseAtRoot(c, true);
        _stats.imported++;
    }
}

void CdclSolver::retryDeferred() {
    std::deque<AggregatedBatch> still;
    for (auto& b : _deferred) {
        if (static_cast<int64_t>(b.maxRevision) <= _revision) importClauses(b.clauses, b.maxRevision);
        else still.push_back(std::move(b));
    }
    _deferred = std::move(still);
}

} // namespace incrasat::sat
