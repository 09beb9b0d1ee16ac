#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "incrasat/transport/transport.hpp"

namespace incrasat::sched {

/// Demand of one job under exponential growth d := 2d+1 per interval,
/// capped at the number of workers.
struct DemandSchedule {
    int currentDemand {1};
    double growthIntervalMs {500};
    int cap {1};
    double lastUpdateMs {0};

    /// Restart the staircase at demand 1 (revision start or conclusion).
    void reset(double nowMs) {
        currentDemand = 1;
        lastUpdateMs = nowMs;
    }
};

/// At most one growth step per call. The update time advances by exactly one
/// interval so that late calls do not shift later steps.
DemandSchedule growDemand(DemandSchedule sched, double nowMs);

struct JobDemand {
    uint64_t job {0};
    int demand {1};
};

struct VolumeAssignment {
    std::map<uint64_t, int> volumes;
    // Jobs beyond worker capacity (volume 0, queued).
    std::vector<uint64_t> deferred;
};

/// Water-filling fair share: jobs whose demand fits the equal share get their
/// demand, the remaining capacity is re-split among the rest, and leftover
/// units go to the largest fractional remainders, ties to the lower job id.
/// If there are more jobs than workers, the highest ids are deferred.
VolumeAssignment computeVolumes(std::span<const JobDemand> jobs, int totalWorkers);

enum class NodeState : uint8_t { VACANT, ACTIVE, SUSPENDED };

const char* nameOf(NodeState s);

/// Per-rank occupancy as seen by the coordinator.
class ClusterState {
public:
    explicit ClusterState(int workers) : _active(workers, 0), _hosted(workers, 0) {}

    int workers() const { return static_cast<int>(_active.size()); }
    /// Least-loaded rank without an active node, ties to the lowest rank.
    /// Falls back to the least-loaded rank overall when every rank is busy.
    int pickHost() const;

    void onCreated(int rank) { _active[rank]++; _hosted[rank]++; }
    void onSuspended(int rank) { _active[rank]--; }
    void onResumed(int rank) { _active[rank]++; }
    void onReleased(int rank, bool wasActive) {
        _hosted[rank]--;
        if (wasActive) _active[rank]--;
    }
    int activeOn(int rank) const { return _active[rank]; }
    int hostedOn(int rank) const { return _hosted[rank]; }

private:
    std::vector<int> _active;
    std::vector<int> _hosted;
};

struct TreeSlot {
    int host {-1};
    NodeState state {NodeState::VACANT};
};

/// Placement of one job's binary worker tree: index k has children 2k+1 and
/// 2k+2, and the active indices always form the prefix {0..volume-1}.
/// A slot keeps its host from first activation until finalization.
class JobTree {
public:
    explicit JobTree(uint64_t job) : _job(job) {}

    uint64_t job() const { return _job; }
    int volume() const;
    const std::vector<TreeSlot>& slots() const { return _slots; }
    std::vector<int32_t> activeHosts() const;
    bool hasRoot() const { return !_slots.empty() && _slots[0].state == NodeState::ACTIVE; }

    /// Moves the active set to {0..volume-1}. Newly needed indices are
    /// resumed where a suspended node exists and recruited on a vacant host
    /// otherwise; indices >= volume are suspended. The root is never
    /// suspended here. Returns the envelopes to send (from `coordinatorRank`).
    std::vector<Envelope> applyVolume(int volume, uint32_t revision, ClusterState& cluster,
                                      int coordinatorRank);

    /// Releases every hosted slot. Returns FINALIZE envelopes, one per host.
    std::vector<Envelope> release(ClusterState& cluster, int coordinatorRank);

private:
    uint64_t _job;
    std::vector<TreeSlot> _slots;
};

/// Main-loop poll interval: reset to the minimum whenever a worker was
/// scheduled on the node, otherwise grows geometrically up to the maximum.
class PollInterval {
public:
    PollInterval(double minMs = 1, double maxMs = 10, double growth = 1.3)
        : _min(minMs), _max(maxMs), _growth(growth), _current(maxMs) {}

    double next(bool newlyScheduled) {
        _current = newlyScheduled ? _min : std::min(_max, _current * _growth);
        return _current;
    }
    double current() const { return _current; }

private:
    double _min, _max, _growth, _current;
};

} // namespace incrasat::sched
