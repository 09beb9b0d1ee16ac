#include "incrasat/revision/lifecycle.hpp"

#include "incrasat/model/payload_codec.hpp"
#include "incrasat/node/messages.hpp"

namespace incrasat::revision {

const char* nameOf(JobStatus s) {
    switch (s) {
    case JobStatus::IDLE_BETWEEN_REVISIONS: return "IDLE_BETWEEN_REVISIONS";
    case JobStatus::SOLVING: return "SOLVING";
    case JobStatus::CONCLUDED: return "CONCLUDED";
    case JobStatus::FINALIZED: return "FINALIZED";
    }
    return "?";
}

std::optional<uint32_t> JobLifecycle::currentRevision() const {
    if (_revisions.empty()) return std::nullopt;
    return static_cast<uint32_t>(_revisions.size() - 1);
}

void JobLifecycle::submit(RevisionPayload payload) {
    if (_status == JobStatus::FINALIZED)
        throw ProtocolError("job " + _id.name + " is finalized");
    if (_status == JobStatus::SOLVING)
        throw ProtocolError("job " + _id.name + ": previous revision has not finished");
    if (payload.revision != nextRevision())
        throw ProtocolError("job " + _id.name + ": expected revision " + std::to_string(nextRevision())
                            + ", got " + std::to_string(payload.revision));
    _revisions.push_back(std::move(payload));
    _status = JobStatus::SOLVING;
    _lastOutcome.reset();
}

ResultDisposition JobLifecycle::conclude(uint32_t revision, const SolveOutcome& outcome) {
    auto current = currentRevision();
    if (!current || revision != *current) {
        _audit.push_back("dropped result for non-current revision " + std::to_string(revision));
        return ResultDisposition::STALE;
    }
    if (_status != JobStatus::SOLVING) {
        _audit.push_back("dropped duplicate result for revision " + std::to_string(revision));
        return ResultDisposition::DUPLICATE;
    }
    _status = JobStatus::CONCLUDED;
    _lastOutcome = outcome;
    return ResultDisposition::ACCEPTED;
}

bool JobLifecycle::cancel() {
    if (_status != JobStatus::SOLVING) return false;
    _status = JobStatus::CONCLUDED;
    _lastOutcome = SolveOutcome::unknown();
    return true;
}

void JobLifecycle::finalize() {
    if (_status == JobStatus::SOLVING)
        throw ProtocolError("job " + _id.name + " cannot be finalized while solving; cancel first");
    _status = JobStatus::FINALIZED;
    _doneSignal = true;
}

bool JobNode::receivePayload(RevisionPayload payload) {
    if (static_cast<int64_t>(payload.revision) != receivedUpTo() + 1) return false;
    _payloads.push_back(std::move(payload));
    return true;
}

std::vector<uint32_t> JobNode::activeChildren() const {
    std::vector<uint32_t> out;
    for (uint32_t c : {2 * _index + 1, 2 * _index + 2})
        if (c < _hosts.size()) out.push_back(c);
    return out;
}

int64_t JobNode::forwardedTo(uint32_t child) const {
    auto it = _forwarded.find(child);
    return it == _forwarded.end() ? -1 : it->second;
}

std::vector<Envelope> JobNode::propagatePayloads(int myRank) {
    std::vector<Envelope> out;
    if (_state != sched::NodeState::ACTIVE) return out;
    for (uint32_t child : activeChildren()) {
        auto& fwd = _forwarded.try_emplace(child, -1).first->second;
        while (fwd < receivedUpTo()) {
            fwd++;
            PayloadMsg msg {_job, child, encodePayload(_payloads[fwd])};
            out.push_back({Tag::PAYLOAD_CHUNK, myRank, _hosts[child], msg.encode(), 0});
        }
    }
    return out;
}

} // namespace incrasat::revision
