#include "incrasat/sched/scheduling.hpp"

#include <algorithm>
#include <cmath>

#include "incrasat/node/messages.hpp"

namespace incrasat::sched {

DemandSchedule growDemand(DemandSchedule sched, double nowMs) {
    if (nowMs - sched.lastUpdateMs >= sched.growthIntervalMs) {
        sched.currentDemand = std::min(2 * sched.currentDemand + 1, sched.cap);
        sched.lastUpdateMs += sched.growthIntervalMs;
    }
    return sched;
}

VolumeAssignment computeVolumes(std::span<const JobDemand> jobs, int totalWorkers) {
    std::vector<JobDemand> sorted(jobs.begin(), jobs.end());
    std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.job < b.job; });

    VolumeAssignment out;
    if (static_cast<int>(sorted.size()) > totalWorkers) {
        for (size_t i = totalWorkers; i < sorted.size(); i++) {
            out.deferred.push_back(sorted[i].job);
            out.volumes[sorted[i].job] = 0;
        }
        sorted.resize(totalWorkers);
    }

    std::vector<JobDemand> open = sorted;
    double remaining = totalWorkers;
    while (!open.empty()) {
        double share = remaining / open.size();
        std::vector<JobDemand> rest;
        for (auto& j : open) {
            if (j.demand <= share) {
                out.volumes[j.job] = j.demand;
                remaining -= j.demand;
            } else {
                rest.push_back(j);
            }
        }
        if (rest.size() == open.size()) break;
        open = std::move(rest);
    }
    if (open.empty()) return out;

    double share = remaining / open.size();
    int base = static_cast<int>(std::floor(share));
    int leftover = static_cast<int>(std::lround(remaining)) - base * static_cast<int>(open.size());
    // Equal shares give equal remainders, so the tie-break decides: lower id first.
    for (auto& j : open) {
        int v = base;
        if (leftover > 0 && v < j.demand) {
            v++;
            leftover--;
        }
        out.volumes[j.job] = std::max(1, v);
    }
    return out;
}

const char* nameOf(NodeState s) {
    switch (s) {
    case NodeState::ACTIVE: return "ACTIVE";
    case NodeState::SUSPENDED: return "SUSPENDED";
    default: return "VACANT";
    }
}

int ClusterState::pickHost() const {
    int best = -1;
    for (int r = 0; r < workers(); r++) {
        if (_active[r] > 0) continue;
        if (best < 0 || _hosted[r] < _hosted[best]) best = r;
    }
    if (best >= 0) return best;
    for (int r = 0; r < workers(); r++) {
        if (best < 0 || _active[r] < _active[best]
            || (_active[r] == _active[best] && _hosted[r] < _hosted[best]))
            best = r;
    }
    return best;
}

int JobTree::volume() const {
    int v = 0;
    while (v < static_cast<int>(_slots.size()) && _slots[v].state == NodeState::ACTIVE) v++;
    return v;
}

std::vector<int32_t> JobTree::activeHosts() const {
    std::vector<int32_t> hosts;
    for (int i = 0; i < volume(); i++) hosts.push_back(_slots[i].host);
    return hosts;
}

std::vector<Envelope> JobTree::applyVolume(int volume, uint32_t revision, ClusterState& cluster,
                                           int coordinatorRank) {
    std::vector<Envelope> out;
    volume = std::max(volume, hasRoot() ? 1 : 0);
    if (static_cast<int>(_slots.size()) < volume) _slots.resize(volume);

    for (int i = 0; i < static_cast<int>(_slots.size()); i++) {
        auto& slot = _slots[i];
        if (i < volume && slot.state != NodeState::ACTIVE) {
            NodeAssignmentMsg msg {_job, static_cast<uint32_t>(i), revision};
            if (slot.state == NodeState::SUSPENDED) {
                cluster.onResumed(slot.host);
                out.push_back({Tag::RESUME, coordinatorRank, slot.host, msg.encode(), 0});
            } else {
                slot.host = cluster.pickHost();
                cluster.onCreated(slot.host);
                out.push_back({Tag::JOB_REQUEST, coordinatorRank, slot.host, msg.encode(), 0});
            }
            slot.state = NodeState::ACTIVE;
        } else if (i >= volume && slot.state == NodeState::ACTIVE && i != 0) {
            cluster.onSuspended(slot.host);
            slot.state = NodeState::SUSPENDED;
            SuspendMsg msg {_job, static_cast<uint32_t>(i)};
            out.push_back({Tag::SUSPEND, coordinatorRank, slot.host, msg.encode(), 0});
        }
    }
    return out;
}

std::vector<Envelope> JobTree::release(ClusterState& cluster, int coordinatorRank) {
    std::vector<int> hosts;
    for (auto& slot : _slots) {
        if (slot.state == NodeState::VACANT) continue;
        cluster.onReleased(slot.host, slot.state == NodeState::ACTIVE);
        if (std::find(hosts.begin(), hosts.end(), slot.host) == hosts.end()) hosts.push_back(slot.host);
        slot = TreeSlot {};
    }
    std::vector<Envelope> out;
    for (int h : hosts) out.push_back({Tag::FINALIZE, coordinatorRank, h, FinalizeMsg {_job}.encode(), 0});
    return out;
}

} // namespace incrasat::sched
