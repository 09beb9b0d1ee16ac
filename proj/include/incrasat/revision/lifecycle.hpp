#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "incrasat/model/types.hpp"
#include "incrasat/sched/scheduling.hpp"
#include "incrasat/transport/transport.hpp"

namespace incrasat::revision {

enum class JobStatus : uint8_t { IDLE_BETWEEN_REVISIONS, SOLVING, CONCLUDED, FINALIZED };

const char* nameOf(JobStatus s);

enum class ResultDisposition : uint8_t { ACCEPTED, DUPLICATE, STALE };

/// Revision gating of one incremental job, owned by the coordinator.
/// Revisions are gapless, at most one is SOLVING, and the first result for
/// the current revision wins.
class JobLifecycle {
public:
    explicit JobLifecycle(JobId id) : _id(std::move(id)) {}

    const JobId& id() const { return _id; }
    JobStatus status() const { return _status; }
    /// Revision that is SOLVING or was concluded last; nullopt for a fresh job.
    std::optional<uint32_t> currentRevision() const;
    uint32_t nextRevision() const { return static_cast<uint32_t>(_revisions.size()); }
    const std::vector<RevisionPayload>& revisions() const { return _revisions; }
    const std::optional<SolveOutcome>& lastOutcome() const { return _lastOutcome; }
    bool doneSignalSeen() const { return _doneSignal; }
    const std::vector<std::string>& audit() const { return _audit; }

    /// Throws ProtocolError on an out-of-order revision index, while the
    /// previous revision is still solving, or after finalization.
    void submit(RevisionPayload payload);
    ResultDisposition conclude(uint32_t revision, const SolveOutcome& outcome);
    /// Concludes the solving revision as UNKNOWN. Returns false (no-op) when
    /// nothing is solving.
    bool cancel();
    /// Throws ProtocolError while a revision is solving.
    void finalize();

private:
    JobId _id;
    std::vector<RevisionPayload> _revisions;
    JobStatus _status {JobStatus::IDLE_BETWEEN_REVISIONS};
    std::optional<SolveOutcome> _lastOutcome;
    bool _doneSignal {false};
    std::vector<std::string> _audit;
};

/// One tree position of a job as held by its host: the received payload
/// history, the received watermark and what has been forwarded to children.
class JobNode {
public:
    JobNode(uint64_t job, uint32_t index) : _job(job), _index(index) {}

    uint64_t job() const { return _job; }
    uint32_t index() const { return _index; }
    bool isRoot() const { return _index == 0; }

    sched::NodeState state() const { return _state; }
    void setState(sched::NodeState s) { _state = s; }

    /// Highest r such that P_0..P_r have all arrived; -1 if none.
    int64_t receivedUpTo() const { return static_cast<int64_t>(_payloads.size()) - 1; }
    const std::vector<RevisionPayload>& payloads() const { return _payloads; }
    /// Accepts the next payload in revision order; returns false for a
    /// duplicate or a gap (the payload is then ignored).
    bool receivePayload(RevisionPayload payload);
    /// A node may only process revision r once P_0..P_r arrived.
    bool readyFor(uint32_t revision) const { return receivedUpTo() >= static_cast<int64_t>(revision); }

    /// Latest revision this node was asked to solve; -1 if none.
    int64_t targetRevision() const { return _target; }
    void setTarget(uint32_t revision) { _target = std::max<int64_t>(_target, revision); }
    /// Revisions up to this one are concluded job-wide.
    int64_t concludedUpTo() const { return _concluded; }
    void markConcluded(uint32_t revision) { _concluded = std::max<int64_t>(_concluded, revision); }
    bool wantsToSolve() const {
        return _state == sched::NodeState::ACTIVE && _target > _concluded && readyFor(_target);
    }

    const std::vector<int32_t>& treeHosts() const { return _hosts; }
    void setTreeHosts(std::vector<int32_t> hosts) { _hosts = std::move(hosts); }
    /// Child indices that are active according to the last known tree map.
    std::vector<uint32_t> activeChildren() const;

    /// Forwards to each active child every payload it is missing, in
    /// revision order, as unframed PAYLOAD_CHUNK envelopes from `myRank`.
    std::vector<Envelope> propagatePayloads(int myRank);
    int64_t forwardedTo(uint32_t child) const;

private:
    uint64_t _job;
    uint32_t _index;
    sched::NodeState _state {sched::NodeState::VACANT};
    std::vector<RevisionPayload> _payloads;
    int64_t _target {-1};
    int64_t _concluded {-1};
    std::vector<int32_t> _hosts;
    std::map<uint32_t, int64_t> _forwarded;
};

} // namespace incrasat::revision
