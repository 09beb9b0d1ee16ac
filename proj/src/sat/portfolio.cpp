#include "incrasat/sat/portfolio.hpp"

#include <sys/resource.h>
#include <sys/syscall.h>
#include <unistd.h>

namespace incrasat::sat {

Portfolio::Portfolio(PortfolioConfig config) : _config(std::move(config)) {
    int k = std::max(1, _config.threads);
    for (int i = 0; i < k; i++) {
        auto sc = diversifiedConfig(_config.seed, i);
        sc.importEnabled = _config.importEnabled;
        sc.maxSharedLength = _config.maxSharedLength;
        auto slot = std::make_unique<Slot>(sc);
        Slot* raw = slot.get();
        raw->solver.setLearnedClauseCallback([raw](const Clause& c) {
            std::lock_guard lock(raw->bufferMtx);
            if (raw->exports.size() >= kMaxExportBuffer)
                raw->exports.erase(raw->exports.begin(), raw->exports.begin() + kMaxExportBuffer / 2);
            raw->exports.push_back(c);
        });
        raw->solver.setRestartHook([this, raw] { drainImports(*raw); });
        _slots.push_back(std::move(slot));
    }
    if (_config.threaded)
        for (auto& slot : _slots) slot->thread = std::thread([this, s = slot.get()] { threadMain(*s); });
}

Portfolio::~Portfolio() {
    if (!_config.threaded) return;
    {
        std::lock_guard lock(_ctlMtx);
        _shutdown = true;
        _stop = true;
    }
    _taskCv.notify_all();
    for (auto& slot : _slots)
        if (slot->thread.joinable()) slot->thread.join();
}

void Portfolio::drainImports(Slot& slot) {
    std::deque<AggregatedBatch> batches;
    {
        std::lock_guard lock(slot.bufferMtx);
        batches.swap(slot.imports);
    }
    for (auto& b : batches) slot.solver.offerBatch(b);
    std::lock_guard lock(slot.bufferMtx);
    slot.lastStats = slot.solver.stats();
}

void Portfolio::threadMain(Slot& slot) {
    if (_config.niceness != 0)
        setpriority(PRIO_PROCESS, static_cast<id_t>(syscall(SYS_gettid)), _config.niceness);
    uint64_t seen = 0;
    while (true) {
        std::vector<Literal> assumptions;
        {
            std::unique_lock lock(_ctlMtx);
            _taskCv.wait(lock, [&] { return _shutdown || _generation != seen; });
            if (_shutdown) return;
            seen = _generation;
            assumptions = _assumptions;
        }
        SolveLimits limits;
        limits.terminate = [this] { return _stop.load(std::memory_order_relaxed); };
        auto out = slot.solver.solve(assumptions, limits);
        {
            std::lock_guard lock(slot.bufferMtx);
            slot.lastStats = slot.solver.stats();
        }
        bool news;
        {
            std::lock_guard lock(_ctlMtx);
            if (out.verdict != Verdict::UNKNOWN && !_result && seen == _generation && !_stop) {
                _result = std::move(out);
                _stop = true;
            }
            _busy--;
            news = _result.has_value() || _busy == 0;
        }
        _idleCv.notify_all();
        if (news && _config.onFinish) _config.onFinish();
    }
}

void Portfolio::waitIdle(std::unique_lock<std::mutex>& lock) {
    _idleCv.wait(lock, [&] { return _busy == 0; });
}

void Portfolio::interrupt() {
    if (_config.threaded) {
        std::unique_lock lock(_ctlMtx);
        _stop = true;
        waitIdle(lock);
        _result.reset();
    }
    _running = false;
}

void Portfolio::ingest(const RevisionPayload& payload) {
    interrupt();
    for (auto& slot : _slots) slot->solver.ingest(payload);
    _revision = payload.revision;
    _maxVar = std::max(_maxVar, payload.maxVar);
}

void Portfolio::start(std::vector<Literal> assumptions) {
    interrupt();
    if (_config.threaded) {
        std::lock_guard lock(_ctlMtx);
        _assumptions = std::move(assumptions);
        _result.reset();
        _stop = false;
        _busy = static_cast<int>(_slots.size());
        _generation++;
    } else {
        _assumptions = std::move(assumptions);
    }
    _running = true;
    if (_config.threaded) _taskCv.notify_all();
}

SolveOutcome Portfolio::trimmed(SolveOutcome out) const {
    if (out.verdict == Verdict::SAT && out.model.size() > _maxVar) out.model.resize(_maxVar);
    return out;
}

std::optional<SolveOutcome> Portfolio::poll() {
    if (!_running) return std::nullopt;
    if (_config.threaded) {
        std::lock_guard lock(_ctlMtx);
        if (_result) {
            _running = false;
            auto out = std::move(*_result);
            _result.reset();
            return trimmed(std::move(out));
        }
        if (_busy == 0) {
            _running = false;
            return SolveOutcome::unknown();
        }
        return std::nullopt;
    }
    for (auto& slot : _slots) {
        SolveLimits limits;
        limits.conflictBudget = _config.conflictsPerStep;
        auto out = slot->solver.solve(_assumptions, limits);
        slot->lastStats = slot->solver.stats();
        if (out.verdict != Verdict::UNKNOWN) {
            _running = false;
            return trimmed(std::move(out));
        }
    }
    return std::nullopt;
}

std::vector<Clause> Portfolio::drainExports() {
    std::vector<Clause> out;
    for (auto& slot : _slots) {
        std::lock_guard lock(slot->bufferMtx);
        out.insert(out.end(), std::make_move_iterator(slot->exports.begin()),
                   std::make_move_iterator(slot->exports.end()));
        slot->exports.clear();
    }
    return out;
}

void Portfolio::offer(const AggregatedBatch& batch) {
    if (batch.clauses.empty() || !_config.importEnabled) return;
    for (auto& slot : _slots) {
        std::lock_guard lock(slot->bufferMtx);
        slot->imports.push_back(batch);
        // Dropping shared clauses is always sound.
        if (slot->imports.size() > kMaxImportQueue) slot->imports.pop_front();
    }
}

Portfolio::Totals Portfolio::totals() const {
    Totals t;
    for (auto& slot : _slots) {
        std::lock_guard lock(slot->bufferMtx);
        t.conflicts += slot->lastStats.conflicts;
        t.imported += slot->lastStats.imported;
        t.deferredBatches += slot->lastStats.deferredBatches;
        t.droppedDeferred += slot->lastStats.droppedDeferred;
        t.selfSkipped += slot->lastStats.selfSkipped;
    }
    return t;
}

} // namespace incrasat::sat
