#include "incrasat/transport/loopback_transport.hpp"

#include <algorithm>
#include <chrono>

namespace incrasat {

LoopbackTransport::LoopbackTransport(int size, uint64_t seed, size_t maxMessageSize, double maxDelayMs)
    : Transport(maxMessageSize), _size(size), _inboxes(size), _rng(seed), _maxDelay(maxDelayMs) {}

void LoopbackTransport::send(Envelope env) {
    checkEnvelope(env);
    if (env.source < 0 || env.source >= _size)
        throw RoutingError("unknown source rank " + std::to_string(env.source));
    {
        std::lock_guard lock(_mtx);
        auto pair = std::make_pair(env.source, env.dest);
        env.seq = _nextSeq[pair]++;
        double visible = _now;
        if (_maxDelay > 0) {
            visible += std::uniform_real_distribution<double>(0, _maxDelay)(_rng);
            auto& last = _lastVisible[pair];
            visible = std::max(visible, last);
            last = visible;
        }
        auto& box = _inboxes[env.dest];
        box.bySource[env.source].push_back({std::move(env), visible});
        box.cv.notify_all();
    }
}

bool LoopbackTransport::hasVisible(const Inbox& box) const {
    for (const auto& [src, q] : box.bySource)
        if (!q.empty() && q.front().visibleAt <= _now) return true;
    return false;
}

std::vector<Envelope> LoopbackTransport::poll(int rank, size_t budget) {
    std::lock_guard lock(_mtx);
    auto& box = _inboxes.at(rank);
    box.woken = false;
    std::vector<Envelope> out;
    std::vector<int> ready;
    while (out.size() < budget) {
        ready.clear();
        for (const auto& [src, q] : box.bySource)
            if (!q.empty() && q.front().visibleAt <= _now) ready.push_back(src);
        if (ready.empty()) break;
        int src = ready.size() == 1
            ? ready[0]
            : ready[std::uniform_int_distribution<size_t>(0, ready.size() - 1)(_rng)];
        auto& q = box.bySource[src];
        if (_tracing) _trace.push_back({_now, src, rank, q.front().env.tag, q.front().env.seq});
        out.push_back(std::move(q.front().env));
        q.pop_front();
    }
    return out;
}

bool LoopbackTransport::waitForMessage(int rank, double timeoutMs) {
    std::unique_lock lock(_mtx);
    auto& box = _inboxes.at(rank);
    auto deadline = std::chrono::steady_clock::now()
        + std::chrono::microseconds(static_cast<int64_t>(timeoutMs * 1000));
    box.cv.wait_until(lock, deadline, [&] { return box.woken || hasVisible(box); });
    box.woken = false;
    return hasVisible(box);
}

void LoopbackTransport::wake(int rank) {
    std::lock_guard lock(_mtx);
    auto& box = _inboxes.at(rank);
    box.woken = true;
    box.cv.notify_all();
}

void LoopbackTransport::setTime(double nowMs) {
    std::lock_guard lock(_mtx);
    _now = nowMs;
}

double LoopbackTransport::time() const {
    std::lock_guard lock(_mtx);
    return _now;
}

std::vector<LoopbackTransport::TraceEntry> LoopbackTransport::trace() const {
    std::lock_guard lock(_mtx);
    return _trace;
}

size_t LoopbackTransport::pendingCount(int rank) const {
    std::lock_guard lock(_mtx);
    size_t n = 0;
    for (const auto& [src, q] : _inboxes.at(rank).bySource) n += q.size();
    return n;
}

size_t LoopbackTransport::pendingTotal() const {
    size_t n = 0;
    for (int r = 0; r < _size; r++) n += pendingCount(r);
    return n;
}

} // namespace incrasat
