#include "incrasat/node/worker.hpp"

#include "incrasat/model/payload_codec.hpp"

namespace incrasat {

namespace {
std::atomic<uint64_t> g_prematureStarts {0};
}

uint64_t prematureSolveStarts() { return g_prematureStarts.load(); }

Worker::Worker(int rank, Transport& transport, WorkerConfig config)
    : _rank(rank), _transport(transport), _config(config), _sender(rank) {}

Worker::~Worker() = default;

Worker::Runtime& Worker::obtain(uint64_t job, uint32_t index) {
    auto it = _nodes.find({job, index});
    if (it == _nodes.end()) it = _nodes.try_emplace({job, index}, job, index).first;
    return it->second;
}

Worker::Runtime* Worker::find(uint64_t job, uint32_t index) {
    auto it = _nodes.find({job, index});
    return it == _nodes.end() ? nullptr : &it->second;
}

const revision::JobNode* Worker::node(uint64_t job, uint32_t index) const {
    auto it = _nodes.find({job, index});
    return it == _nodes.end() ? nullptr : &it->second.node;
}

int64_t Worker::solvingRevision(uint64_t job, uint32_t index) const {
    auto it = _nodes.find({job, index});
    return it == _nodes.end() ? -1 : it->second.solving;
}

void Worker::send(Tag tag, int dest, std::vector<uint8_t> body) {
    _transport.send({tag, _rank, dest, std::move(body), 0});
}

void Worker::sendAll(std::vector<Envelope> envs) {
    for (auto& e : envs) {
        if (e.tag == Tag::PAYLOAD_CHUNK) _sender.send(_transport, std::move(e));
        else _transport.send(std::move(e));
    }
}

void Worker::stopSolving(Runtime& rt) {
    if (rt.portfolio) rt.portfolio->interrupt();
    rt.solving = -1;
}

bool Worker::handle(const Envelope& env, double nowMs) {
    (void) nowMs;
    switch (env.tag) {
    case Tag::JOB_REQUEST:
    case Tag::RESUME: {
        auto m = NodeAssignmentMsg::decode(env.body);
        auto& rt = obtain(m.job, m.index);
        rt.node.setState(sched::NodeState::ACTIVE);
        rt.node.setTarget(m.revision);
        return true;
    }
    case Tag::SUSPEND: {
        auto m = SuspendMsg::decode(env.body);
        if (auto* rt = find(m.job, m.index)) {
            rt->node.setState(sched::NodeState::SUSPENDED);
            stopSolving(*rt);
        }
        return false;
    }
    case Tag::VOLUME_UPDATE: {
        auto m = VolumeUpdateMsg::decode(env.body);
        for (auto it = _nodes.lower_bound({m.job, 0}); it != _nodes.end() && it->first.first == m.job; ++it) {
            auto& node = it->second.node;
            node.setTreeHosts(m.hosts);
            if (node.state() == sched::NodeState::ACTIVE) node.setTarget(m.revision);
        }
        return false;
    }
    case Tag::PAYLOAD_CHUNK: {
        auto m = PayloadMsg::decode(env.body);
        auto payload = decodePayload(m.payload);
        payload.normalize();
        auto& rt = obtain(m.job, m.index);
        uint32_t rev = payload.revision;
        rt.node.receivePayload(std::move(payload));
        if (rt.node.isRoot()) rt.node.setTarget(rev);
        return false;
    }
    case Tag::CANCEL: {
        auto m = CancelMsg::decode(env.body);
        for (auto it = _nodes.lower_bound({m.job, 0}); it != _nodes.end() && it->first.first == m.job; ++it) {
            auto& rt = it->second;
            rt.node.markConcluded(m.revision);
            if (rt.solving >= 0 && rt.solving <= static_cast<int64_t>(m.revision)) stopSolving(rt);
        }
        return false;
    }
    case Tag::FINALIZE: {
        auto m = FinalizeMsg::decode(env.body);
        auto it = _nodes.lower_bound({m.job, 0});
        while (it != _nodes.end() && it->first.first == m.job) {
            if (it->second.portfolio) {
                auto t = it->second.portfolio->totals();
                _retired.imported += t.imported;
                _retired.deferredBatches += t.deferredBatches;
                _retired.droppedDeferred += t.droppedDeferred;
            }
            it = _nodes.erase(it);
        }
        return false;
    }
    case Tag::CLAUSE_BATCH:
        onClauseBatch(env);
        return false;
    default:
        throw ProtocolError(std::string("worker cannot handle ") + nameOf(env.tag));
    }
}

void Worker::step(double nowMs) {
    for (auto& [key, rt] : _nodes) advance(rt, nowMs);
}

void Worker::advance(Runtime& rt, double nowMs) {
    auto& node = rt.node;
    if (rt.portfolio && rt.portfolio->running()) {
        if (auto out = rt.portfolio->poll()) {
            if (out->verdict != Verdict::UNKNOWN) {
                ResultMsg msg {node.job(), static_cast<uint32_t>(rt.solving), node.index(), std::move(*out)};
                send(Tag::RESULT, _config.coordinatorRank, msg.encode());
                rt.reported = rt.solving;
                _resultsSent++;
            }
            rt.solving = -1;
        }
    }

    if (node.state() != sched::NodeState::ACTIVE) {
        if (rt.solving >= 0) stopSolving(rt);
        return;
    }
    sendAll(node.propagatePayloads(_rank));

    int64_t target = node.targetRevision();
    if (node.wantsToSolve() && target > rt.reported && rt.solving != target) {
        // independent audit of the payload prefix the solver is about to see
        const auto& ps = node.payloads();
        bool complete = static_cast<int64_t>(ps.size()) > target;
        for (int64_t i = 0; complete && i <= target; i++) complete = ps[i].revision == i;
        if (!complete) {
            g_prematureStarts++;
            return;
        }
        if (!rt.portfolio) {
            sat::PortfolioConfig pc;
            pc.threads = _config.threadsPerProcess;
            pc.seed = _config.seed * 7919 + node.job() * 131 + node.index() * 1000003 + _rank;
            pc.threaded = _config.threaded;
            pc.importEnabled = _config.sharing;
            pc.maxSharedLength = _config.sharedClauseMaxLen;
            pc.conflictsPerStep = _config.conflictsPerStep;
            pc.onFinish = [this] { if (_wake) _wake(); };
            rt.portfolio = std::make_unique<sat::Portfolio>(pc);
        }
        auto& pf = *rt.portfolio;
        while (pf.revision() < target) pf.ingest(node.payloads()[pf.revision() + 1]);
        pf.start(node.payloads()[target].assumptions);
        rt.solving = target;
    } else if (rt.solving >= 0 && !node.wantsToSolve()) {
        stopSolving(rt);
    }

    if (_config.sharing && node.isRoot() && rt.solving >= 0 && !rt.epoch) {
        if (rt.nextEpochMs < 0) {
            rt.nextEpochMs = nowMs + _config.sharingPeriodMs;
        } else if (nowMs >= rt.nextEpochMs) {
            rt.nextEpochMs = nowMs + _config.sharingPeriodMs;
            openEpoch(rt, rt.nextEpochId++, -1, 0, nowMs);
        }
    }
}

sat::AggregatedBatch Worker::ownContribution(Runtime& rt) {
    sat::AggregatedBatch b;
    if (!rt.portfolio) return b;
    b.clauses = sat::packShortestFirst(rt.portfolio->drainExports(), _config.sharingBudget,
                                       _config.sharedClauseMaxLen);
    b.maxRevision = static_cast<uint32_t>(std::max<int64_t>(0, rt.portfolio->revision()));
    return b;
}

void Worker::openEpoch(Runtime& rt, uint64_t id, int replyTo, uint32_t parentIndex, double nowMs) {
    (void) nowMs;
    Epoch e;
    e.id = id;
    e.replyTo = replyTo;
    e.parentIndex = parentIndex;
    e.acc = ownContribution(rt);
    const auto& hosts = rt.node.treeHosts();
    for (uint32_t c : rt.node.activeChildren()) {
        e.pending.insert(c);
        ClauseBatchMsg msg {rt.node.job(), BatchKind::GATHER, id, rt.node.index(), c, {}};
        send(Tag::CLAUSE_BATCH, hosts[c], msg.encode());
    }
    rt.epoch = std::move(e);
    if (rt.epoch->pending.empty()) closeEpoch(rt);
}

void Worker::closeEpoch(Runtime& rt) {
    Epoch e = std::move(*rt.epoch);
    rt.epoch.reset();
    if (e.replyTo < 0) {
        _epochs++;
        broadcast(rt, e.id, e.acc);
        return;
    }
    ClauseBatchMsg msg {rt.node.job(), BatchKind::CONTRIBUTION, e.id, rt.node.index(), e.parentIndex,
                        std::move(e.acc)};
    send(Tag::CLAUSE_BATCH, e.replyTo, msg.encode());
}

void Worker::broadcast(Runtime& rt, uint64_t id, const sat::AggregatedBatch& batch) {
    if (rt.portfolio) rt.portfolio->offer(batch);
    const auto& hosts = rt.node.treeHosts();
    for (uint32_t c : rt.node.activeChildren()) {
        ClauseBatchMsg msg {rt.node.job(), BatchKind::BROADCAST, id, rt.node.index(), c, batch};
        send(Tag::CLAUSE_BATCH, hosts[c], msg.encode());
    }
}

void Worker::onClauseBatch(const Envelope& env) {
    auto m = ClauseBatchMsg::decode(env.body);
    Runtime* rt = find(m.job, m.toIndex);
    switch (m.kind) {
    case BatchKind::GATHER:
        if (!rt || rt->node.state() != sched::NodeState::ACTIVE || rt->epoch) {
            // Suspended and unknown nodes skip the epoch but always answer.
            ClauseBatchMsg reply {m.job, BatchKind::CONTRIBUTION, m.epoch, m.toIndex, m.fromIndex, {}};
            send(Tag::CLAUSE_BATCH, env.source, reply.encode());
        } else {
            openEpoch(*rt, m.epoch, env.source, m.fromIndex, 0);
        }
        break;
    case BatchKind::CONTRIBUTION:
        if (rt && rt->epoch && rt->epoch->id == m.epoch && rt->epoch->pending.erase(m.fromIndex)) {
            rt->epoch->acc = sat::aggregateBatches(rt->epoch->acc, m.batch, _config.sharingBudget);
            if (rt->epoch->pending.empty()) closeEpoch(*rt);
        }
        break;
    case BatchKind::BROADCAST:
        if (rt && rt->node.state() == sched::NodeState::ACTIVE) broadcast(*rt, m.epoch, m.batch);
        break;
    }
}

Worker::Totals Worker::totals() const {
    Totals t = _retired;
    for (auto& [key, rt] : _nodes) {
        if (!rt.portfolio) continue;
        auto p = rt.portfolio->totals();
        t.imported += p.imported;
        t.deferredBatches += p.deferredBatches;
        t.droppedDeferred += p.droppedDeferred;
    }
    t.epochs = _epochs;
    t.resultsSent = _resultsSent;
    return t;
}

} // namespace incrasat
