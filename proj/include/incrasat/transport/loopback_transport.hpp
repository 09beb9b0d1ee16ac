#pragma once

#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <random>
#include <vector>

#include "incrasat/transport/transport.hpp"

namespace incrasat {

/// In-process transport. Deliveries into one inbox are interleaved across
/// source ranks by a seeded generator; with a nonzero maximum delay each
/// message additionally becomes visible only after a random delay on the
/// transport's clock (set by the driver via setTime). Per-pair FIFO holds
/// regardless: a message never becomes visible before its predecessor.
class LoopbackTransport : public Transport {
public:
    struct TraceEntry {
        double time;
        int source;
        int dest;
        Tag tag;
        uint64_t seq;
        bool operator==(const TraceEntry&) const = default;
    };

    LoopbackTransport(int size, uint64_t seed, size_t maxMessageSize = kDefaultMaxMessageSize,
                      double maxDelayMs = 0);

    int size() const override { return _size; }
    void send(Envelope env) override;
    std::vector<Envelope> poll(int rank, size_t budget) override;
    bool waitForMessage(int rank, double timeoutMs) override;
    void wake(int rank) override;

    void setTime(double nowMs);
    double time() const;
    void setTracing(bool on) { _tracing = on; }
    std::vector<TraceEntry> trace() const;
    size_t pendingCount(int rank) const;
    size_t pendingTotal() const;

private:
    struct Pending {
        Envelope env;
        double visibleAt;
    };
    struct Inbox {
        std::map<int, std::deque<Pending>> bySource;
        bool woken {false};
        std::condition_variable cv;
    };

    bool hasVisible(const Inbox& box) const;

    int _size;
    mutable std::mutex _mtx;
    std::vector<Inbox> _inboxes;
    std::map<std::pair<int, int>, uint64_t> _nextSeq;
    std::map<std::pair<int, int>, double> _lastVisible;
    std::mt19937_64 _rng;
    double _maxDelay;
    double _now {0};
    bool _tracing {false};
    std::vector<TraceEntry> _trace;
};

} // namespace incrasat
