#include "incrasat/node/coordinator.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

#include "incrasat/model/payload_codec.hpp"

namespace incrasat {

Coordinator::Coordinator(int rank, Transport& transport, CoordinatorConfig config, Clock clock,
                         harness::MetricsRecorder* metrics)
    : _rank(rank), _transport(transport), _config(config), _clock(std::move(clock)), _metrics(metrics),
      _sender(rank, uint64_t(1) << 39), _cluster(config.workers) {}

Coordinator::Job* Coordinator::findJob(const std::string& name) {
    auto it = _byName.find(name);
    return it == _byName.end() ? nullptr : &_jobs.at(it->second);
}

const Coordinator::Job* Coordinator::findJob(const std::string& name) const {
    auto it = _byName.find(name);
    return it == _byName.end() ? nullptr : &_jobs.at(it->second);
}

void Coordinator::send(Envelope env) {
    if (env.tag == Tag::PAYLOAD_CHUNK) _sender.send(_transport, std::move(env));
    else _transport.send(std::move(env));
}

void Coordinator::submit(const std::string& name, RevisionPayload payload) {
    payload.validate();
    std::lock_guard lock(_mtx);
    double now = _clock();
    Job* job = findJob(name);
    bool fresh = job == nullptr;
    if (fresh) {
        uint64_t id = _nextId++;
        job = &_jobs.try_emplace(id, JobId {name, id}).first->second;
        _byName[name] = id;
    }
    try {
        job->life.submit(std::move(payload));
    } catch (...) {
        if (fresh) {
            _jobs.erase(_byName[name]);
            _byName.erase(name);
        }
        throw;
    }
    job->submittedAtMs = now;
    job->demand.cap = _config.workers;
    job->demand.growthIntervalMs = _config.growthIntervalMs;
    job->demand.reset(now);
    if (_metrics) _metrics->recordDemand(name, now, 1);
    rebalance();
}

bool Coordinator::cancel(const std::string& name) {
    std::lock_guard lock(_mtx);
    Job* job = findJob(name);
    if (!job || !job->life.cancel()) return false;
    concludeLocked(*job, *job->life.lastOutcome());
    return true;
}

void Coordinator::finalize(const std::string& name) {
    std::lock_guard lock(_mtx);
    Job* job = findJob(name);
    if (!job) return;
    job->life.finalize();
    for (auto& env : job->tree.release(_cluster, _rank)) send(std::move(env));
    uint64_t id = _byName[name];
    _byName.erase(name);
    _jobs.erase(id);
    for (auto it = _conclusions.begin(); it != _conclusions.end();) {
        if (it->first.first == name) it = _conclusions.erase(it);
        else ++it;
    }
    rebalance();
}

uint32_t Coordinator::nextRevision(const std::string& name) const {
    std::lock_guard lock(_mtx);
    const Job* job = findJob(name);
    return job ? job->life.nextRevision() : 0;
}

bool Coordinator::solving(const std::string& name) const {
    std::lock_guard lock(_mtx);
    const Job* job = findJob(name);
    return job && job->life.status() == revision::JobStatus::SOLVING;
}

void Coordinator::onResult(const ResultMsg& msg) {
    std::lock_guard lock(_mtx);
    auto it = _jobs.find(msg.job);
    if (it == _jobs.end()) {
        _audit.push_back("dropped result for unknown job " + std::to_string(msg.job));
        return;
    }
    auto& job = it->second;
    auto disposition = job.life.conclude(msg.revision, msg.outcome);
    if (disposition == revision::ResultDisposition::ACCEPTED) concludeLocked(job, msg.outcome);
    else _audit.push_back(job.life.audit().back());
}

void Coordinator::concludeLocked(Job& job, const SolveOutcome& outcome) {
    double now = _clock();
    uint32_t rev = *job.life.currentRevision();
    const auto& name = job.life.id().name;
    if (job.tree.hasRoot())
        send({Tag::CANCEL, _rank, job.tree.slots()[0].host, CancelMsg {job.life.id().internalId, rev}.encode(), 0});
    job.demand.reset(now);
    if (_metrics) _metrics->recordDemand(name, now, 1);
    rebalance();

    Conclusion c {name, rev, outcome, now - job.submittedAtMs};
    if (_metrics) _metrics->recordCall({name, rev, outcome.verdict, c.turnaroundMs, outcome.wallclockMs});
    _conclusions[{name, rev}] = c;
    for (auto& l : _listeners) l(c);
    _concludedCv.notify_all();
}

void Coordinator::tick() {
    std::lock_guard lock(_mtx);
    double now = _clock();
    bool changed = false;
    for (auto& [id, job] : _jobs) {
        if (job.life.status() != revision::JobStatus::SOLVING) continue;
        auto grown = sched::growDemand(job.demand, now);
        if (grown.currentDemand != job.demand.currentDemand) {
            changed = true;
            if (_metrics) _metrics->recordDemand(job.life.id().name, now, grown.currentDemand);
        }
        job.demand = grown;
    }
    if (changed) rebalance();
}

double Coordinator::msUntilNextGrowth() const {
    std::lock_guard lock(_mtx);
    double now = _clock();
    double best = std::numeric_limits<double>::infinity();
    for (auto& [id, job] : _jobs) {
        if (job.life.status() != revision::JobStatus::SOLVING || job.demand.currentDemand >= job.demand.cap) continue;
        best = std::min(best, std::max(0.0, job.demand.lastUpdateMs + job.demand.growthIntervalMs - now));
    }
    return best;
}

void Coordinator::rebalance() {
    std::vector<sched::JobDemand> demands;
    for (auto& [id, job] : _jobs) {
        bool active = job.life.status() == revision::JobStatus::SOLVING;
        demands.push_back({id, active ? job.demand.currentDemand : 1});
    }
    auto volumes = sched::computeVolumes(demands, _config.workers);
    double now = _clock();
    for (auto& [id, job] : _jobs) {
        int target = volumes.volumes[id];
        int before = job.tree.volume();
        uint32_t rev = job.life.currentRevision().value_or(0);
        auto envs = job.tree.applyVolume(target, rev, _cluster, _rank);
        for (auto& env : envs) send(std::move(env));
        if (!envs.empty()) {
            auto hosts = job.tree.activeHosts();
            VolumeUpdateMsg update {id, rev, hosts};
            auto body = update.encode();
            std::vector<int> sentTo;
            for (int h : hosts) {
                if (std::find(sentTo.begin(), sentTo.end(), h) != sentTo.end()) continue;
                sentTo.push_back(h);
                send({Tag::VOLUME_UPDATE, _rank, h, body, 0});
            }
        }
        if (_metrics && job.tree.volume() != before) _metrics->recordVolume(job.life.id().name, now, job.tree.volume());
        sendPayloads(job);
    }
}

void Coordinator::sendPayloads(Job& job) {
    if (!job.tree.hasRoot()) return;
    const auto& revs = job.life.revisions();
    int root = job.tree.slots()[0].host;
    while (job.payloadsSent < revs.size()) {
        PayloadMsg msg {job.life.id().internalId, 0, encodePayload(revs[job.payloadsSent])};
        send({Tag::PAYLOAD_CHUNK, _rank, root, msg.encode(), 0});
        job.payloadsSent++;
    }
}

void Coordinator::addConclusionListener(std::function<void(const Conclusion&)> listener) {
    std::lock_guard lock(_mtx);
    _listeners.push_back(std::move(listener));
}

std::optional<Conclusion> Coordinator::awaitConclusion(const std::string& name, uint32_t revision,
                                                       double timeoutMs) {
    std::unique_lock lock(_mtx);
    auto deadline = std::chrono::steady_clock::now()
        + std::chrono::microseconds(static_cast<int64_t>(timeoutMs * 1000));
    _concludedCv.wait_until(lock, deadline, [&] { return _conclusions.count({name, revision}) > 0; });
    auto it = _conclusions.find({name, revision});
    if (it == _conclusions.end()) return std::nullopt;
    return it->second;
}

std::optional<Conclusion> Coordinator::conclusion(const std::string& name, uint32_t revision) const {
    std::lock_guard lock(_mtx);
    auto it = _conclusions.find({name, revision});
    if (it == _conclusions.end()) return std::nullopt;
    return it->second;
}

std::optional<uint64_t> Coordinator::jobId(const std::string& name) const {
    std::lock_guard lock(_mtx);
    auto it = _byName.find(name);
    if (it == _byName.end()) return std::nullopt;
    return it->second;
}

std::optional<revision::JobStatus> Coordinator::status(const std::string& name) const {
    std::lock_guard lock(_mtx);
    const Job* job = findJob(name);
    if (!job) return std::nullopt;
    return job->life.status();
}

int Coordinator::volume(const std::string& name) const {
    std::lock_guard lock(_mtx);
    const Job* job = findJob(name);
    return job ? job->tree.volume() : 0;
}

std::vector<sched::TreeSlot> Coordinator::slots(const std::string& name) const {
    std::lock_guard lock(_mtx);
    const Job* job = findJob(name);
    return job ? job->tree.slots() : std::vector<sched::TreeSlot> {};
}

int Coordinator::totalActiveNodes() const {
    std::lock_guard lock(_mtx);
    int n = 0;
    for (int r = 0; r < _cluster.workers(); r++) n += _cluster.activeOn(r);
    return n;
}

std::vector<std::string> Coordinator::audit() const {
    std::lock_guard lock(_mtx);
    return _audit;
}

size_t Coordinator::liveJobs() const {
    std::lock_guard lock(_mtx);
    return _jobs.size();
}

} // namespace incrasat
