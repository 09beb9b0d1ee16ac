#pragma once

#include <condition_variable>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "incrasat/harness/metrics.hpp"
#include "incrasat/node/messages.hpp"
#include "incrasat/revision/lifecycle.hpp"
#include "incrasat/sched/scheduling.hpp"
#include "incrasat/transport/transport.hpp"

namespace incrasat {

struct CoordinatorConfig {
    int workers {1};
    double growthIntervalMs {500};
};

struct Conclusion {
    std::string job;
    uint32_t revision {0};
    SolveOutcome outcome;
    double turnaroundMs {0};
};

/// Client-facing job operations, implemented by the coordinator and used by
/// the bridge daemon.
class JobService {
public:
    virtual ~JobService() = default;
    virtual void submit(const std::string& name, RevisionPayload payload) = 0;
    virtual bool cancel(const std::string& name) = 0;
    virtual void finalize(const std::string& name) = 0;
    /// Revision index the next submission of `name` must carry.
    virtual uint32_t nextRevision(const std::string& name) const = 0;
    virtual bool solving(const std::string& name) const = 0;
};

/// Centralized scheduler of all jobs: lifecycle gating, demand growth, fair
/// volumes and tree placement. Lives on one rank; the API may be called from
/// any thread (a mutex serializes it with the rank's main loop).
class Coordinator : public JobService {
public:
    using Clock = std::function<double()>;

    Coordinator(int rank, Transport& transport, CoordinatorConfig config, Clock clock,
                harness::MetricsRecorder* metrics = nullptr);

    void submit(const std::string& name, RevisionPayload payload) override;
    bool cancel(const std::string& name) override;
    void finalize(const std::string& name) override;
    uint32_t nextRevision(const std::string& name) const override;
    bool solving(const std::string& name) const override;

    /// Main loop hooks.
    void onResult(const ResultMsg& msg);
    void tick();
    /// Time until the next demand growth step of any solving job (infinity if
    /// none), so the main loop can wake up on the growth grid.
    double msUntilNextGrowth() const;

    /// Called (with the coordinator lock held) for every concluded revision.
    void addConclusionListener(std::function<void(const Conclusion&)> listener);
    /// Blocks until revision `revision` of `name` concluded or the timeout
    /// passed (threaded fleets only).
    std::optional<Conclusion> awaitConclusion(const std::string& name, uint32_t revision, double timeoutMs);
    std::optional<Conclusion> conclusion(const std::string& name, uint32_t revision) const;

    std::optional<uint64_t> jobId(const std::string& name) const;
    std::optional<revision::JobStatus> status(const std::string& name) const;
    int volume(const std::string& name) const;
    std::vector<sched::TreeSlot> slots(const std::string& name) const;
    int totalActiveNodes() const;
    std::vector<std::string> audit() const;
    size_t liveJobs() const;

private:
    struct Job {
        Job(JobId id) : life(id), tree(id.internalId) {}
        revision::JobLifecycle life;
        sched::JobTree tree;
        sched::DemandSchedule demand;
        uint32_t payloadsSent {0};
        double submittedAtMs {0};
    };

    Job* findJob(const std::string& name);
    const Job* findJob(const std::string& name) const;
    void rebalance();
    void sendPayloads(Job& job);
    void concludeLocked(Job& job, const SolveOutcome& outcome);
    void send(Envelope env);

    int _rank;
    Transport& _transport;
    CoordinatorConfig _config;
    Clock _clock;
    harness::MetricsRecorder* _metrics;
    ChunkingSender _sender;

    mutable std::mutex _mtx;
    std::condition_variable _concludedCv;
    sched::ClusterState _cluster;
    std::map<uint64_t, Job> _jobs;
    std::map<std::string, uint64_t> _byName;
    uint64_t _nextId {1};
    std::map<std::pair<std::string, uint32_t>, Conclusion> _conclusions;
    std::vector<std::function<void(const Conclusion&)>> _listeners;
    std::vector<std::string> _audit;
};

} // namespace incrasat
