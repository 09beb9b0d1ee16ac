#include "incrasat/node/fleet.hpp"

#include <algorithm>
#include <cstdio>

#include "incrasat/transport/socket_transport.hpp"

namespace incrasat {

RankLoop::RankLoop(int rank, Transport& transport, WorkerConfig config, Coordinator* coordinator,
                   double pollMin, double pollMax, double pollGrowth)
    : _rank(rank), _transport(transport), _worker(rank, transport, config), _coordinator(coordinator),
      _poll(pollMin, pollMax, pollGrowth) {}

double RankLoop::iterate(double nowMs) {
    bool scheduled = false;
    for (auto& env : _transport.poll(_rank, 1024)) {
        try {
            std::optional<Envelope> logical;
            if (env.tag == Tag::PAYLOAD_CHUNK) logical = _assembler.accept(env);
            else logical = std::move(env);
            if (!logical) continue;
            if (logical->tag == Tag::RESULT) {
                if (_coordinator) _coordinator->onResult(ResultMsg::decode(logical->body));
                continue;
            }
            scheduled |= _worker.handle(*logical, nowMs);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "rank %d: dropped %s message: %s\n", _rank, nameOf(env.tag), e.what());
        }
    }
    if (_coordinator) _coordinator->tick();
    _worker.step(nowMs);
    for (auto& hook : _hooks) hook(nowMs);
    {
        std::lock_guard lock(_statsMtx);
        _snapshot = _worker.totals();
    }
    double interval = _poll.next(scheduled);
    if (_coordinator) interval = std::min(interval, _coordinator->msUntilNextGrowth());
    return interval;
}

Worker::Totals RankLoop::totals() const {
    std::lock_guard lock(_statsMtx);
    return _snapshot;
}

Fleet::Fleet(FleetConfig config) : _config(std::move(config)), _epoch(std::chrono::steady_clock::now()) {
    int w = _config.workers;
    if (w < 1) throw std::invalid_argument("a fleet needs at least one worker");
    if (_config.onlyRank >= w) throw std::invalid_argument("rank out of range");
    bool det = deterministic();
    if (det) {
        _config.transport = TransportKind::LOOPBACK;
        _config.onlyRank = -1;
        _loopback = std::make_unique<LoopbackTransport>(w, *_config.deterministicSeed, kDefaultMaxMessageSize,
                                                        _config.maxDelayMs);
        _loopback->setTracing(true);
    } else if (_config.transport == TransportKind::LOOPBACK) {
        if (_config.onlyRank >= 0) throw std::invalid_argument("a single-rank process needs the socket transport");
        _loopback = std::make_unique<LoopbackTransport>(w, _config.seed);
    } else {
        std::filesystem::create_directories(_config.socketDir);
        auto live = SocketTransport::findConflicts(_config.socketDir, w);
        std::string conflicts;
        for (auto& p : live) {
            if (_config.onlyRank >= 0 && p != SocketTransport::socketPath(_config.socketDir, _config.onlyRank))
                continue;
            conflicts += " " + p.string();
        }
        if (!conflicts.empty()) throw std::runtime_error("socket paths already in use:" + conflicts);
        _sockets.resize(w);
        for (int r = 0; r < w; r++)
            if (_config.onlyRank < 0 || _config.onlyRank == r)
                _sockets[r] = std::make_unique<SocketTransport>(w, r, _config.socketDir);
    }

    if (_config.onlyRank <= 0) {
        CoordinatorConfig cc {w, _config.growthIntervalMs};
        _coordinator = std::make_unique<Coordinator>(0, transportOf(0), cc, [this] { return now(); }, &_metrics);
    }

    WorkerConfig wc;
    wc.threadsPerProcess = _config.threadsPerProcess;
    wc.threaded = !det;
    wc.sharing = _config.sharing;
    wc.sharingPeriodMs = _config.sharingPeriodMs;
    wc.sharingBudget = _config.sharingBudget;
    wc.sharedClauseMaxLen = _config.sharedClauseMaxLen;
    wc.seed = det ? *_config.deterministicSeed : _config.seed;
    wc.conflictsPerStep = _config.conflictsPerStep;
    for (int r = 0; r < w; r++) {
        if (_config.onlyRank >= 0 && _config.onlyRank != r) continue;
        auto loop = std::make_unique<RankLoop>(r, transportOf(r), wc, r == 0 ? _coordinator.get() : nullptr,
                                               _config.pollMinMs, _config.pollMaxMs, _config.pollGrowth);
        if (!det) loop->worker().setWakeCallback([this, r] { wake(r); });
        _loops.push_back(std::move(loop));
    }
    _nextPoll.assign(_loops.size(), 0);
}

Fleet::~Fleet() { stop(); }

double Fleet::now() const {
    if (deterministic()) return _virtualNow;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - _epoch).count();
}

Transport& Fleet::transportOf(int rank) {
    if (_loopback) return *_loopback;
    if (rank < 0 || rank >= static_cast<int>(_sockets.size()) || !_sockets[rank])
        throw std::out_of_range("rank " + std::to_string(rank) + " is not run by this process");
    return *_sockets[rank];
}

RankLoop& Fleet::rankLoop(int rank) {
    for (auto& l : _loops)
        if (l->rank() == rank) return *l;
    throw std::out_of_range("rank " + std::to_string(rank) + " is not run by this process");
}

void Fleet::addRank0Hook(std::function<void(double)> hook) { rankLoop(0).addHook(std::move(hook)); }

void Fleet::wake(int rank) { transportOf(rank).wake(rank); }

void Fleet::threadMain(RankLoop& loop) {
    Transport& t = transportOf(loop.rank());
    while (!_stop.load()) {
        double interval = loop.iterate(now());
        t.waitForMessage(loop.rank(), interval);
    }
}

void Fleet::start() {
    if (deterministic() || _started) return;
    _started = true;
    for (auto& l : _loops) _threads.emplace_back([this, loop = l.get()] { threadMain(*loop); });
}

void Fleet::stop() {
    _stop = true;
    if (_started)
        for (auto& l : _loops) wake(l->rank());
    for (auto& t : _threads)
        if (t.joinable()) t.join();
    _threads.clear();
}

void Fleet::submit(const std::string& name, RevisionPayload payload) {
    _coordinator->submit(name, std::move(payload));
}

bool Fleet::cancel(const std::string& name) { return _coordinator->cancel(name); }

void Fleet::finalize(const std::string& name) { _coordinator->finalize(name); }

std::optional<Conclusion> Fleet::awaitResult(const std::string& name, uint32_t revision, double timeoutMs) {
    if (!deterministic()) return _coordinator->awaitConclusion(name, revision, timeoutMs);
    runUntil([&] { return _coordinator->conclusion(name, revision).has_value(); }, timeoutMs);
    return _coordinator->conclusion(name, revision);
}

void Fleet::simulateStep() {
    _virtualNow += 1;
    _loopback->setTime(_virtualNow);
    for (size_t i = 0; i < _loops.size(); i++) {
        if (_nextPoll[i] > _virtualNow) continue;
        _nextPoll[i] = _virtualNow + _loops[i]->iterate(_virtualNow);
    }
}

void Fleet::advance(double ms) {
    if (!deterministic()) {
        std::this_thread::sleep_for(std::chrono::microseconds(static_cast<int64_t>(ms * 1000)));
        return;
    }
    double until = _virtualNow + ms;
    while (_virtualNow < until) simulateStep();
}

bool Fleet::runUntil(const std::function<bool()>& done, double timeoutMs) {
    if (!deterministic()) {
        auto deadline = std::chrono::steady_clock::now()
            + std::chrono::microseconds(static_cast<int64_t>(timeoutMs * 1000));
        while (!done()) {
            if (std::chrono::steady_clock::now() >= deadline) return false;
            std::this_thread::sleep_for(std::chrono::milliseconds(1));
        }
        return true;
    }
    double until = _virtualNow + timeoutMs;
    while (!done()) {
        if (_virtualNow >= until) return false;
        simulateStep();
    }
    return true;
}

Worker::Totals Fleet::workerTotals() const {
    Worker::Totals t;
    for (auto& l : _loops) {
        auto s = l->totals();
        t.imported += s.imported;
        t.deferredBatches += s.deferredBatches;
        t.droppedDeferred += s.droppedDeferred;
        t.epochs += s.epochs;
        t.resultsSent += s.resultsSent;
    }
    return t;
}

} // namespace incrasat
