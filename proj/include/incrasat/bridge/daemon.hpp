#pragma once

#include <atomic>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "incrasat/node/coordinator.hpp"
#include "incrasat/node/fleet.hpp"

namespace incrasat::bridge {

struct DaemonConfig {
    std::filesystem::path submissionDir;
    bool useInotify {true};
    double fallbackPollMs {2};
    double payloadTimeoutMs {10000};
    double resultTimeoutMs {10000};
    size_t inlineResultLimit {64 * 1024};
};

/// Daemon side of the bridge: watches the submission directory, reads
/// payloads from the client pipes into the job service and writes results
/// back. process() runs on the coordinator rank's main loop; a watcher
/// thread only collects file names.
class Daemon {
public:
    struct Stats {
        uint64_t documents {0};
        uint64_t submitted {0};
        uint64_t quarantined {0};
        uint64_t finalized {0};
        uint64_t interrupts {0};
        uint64_t inlineResults {0};
        uint64_t backgroundResults {0};
    };

    Daemon(DaemonConfig config, JobService& service, std::function<void()> wake = {});
    ~Daemon();
    Daemon(const Daemon&) = delete;
    Daemon& operator=(const Daemon&) = delete;

    /// Creates the directory layout and starts the watcher.
    void start();
    void stop();

    /// Main loop hook: consumes queued files and delivers concluded results.
    void process();
    /// Conclusion listener (may be called with the coordinator locked).
    void onConclusion(const Conclusion& c);

    /// Writes an encoded outcome to a result pipe, inline or on a background
    /// thread. Returns false (with an audit entry) if the client is gone.
    bool deliver(const std::filesystem::path& resultPipe, const std::vector<uint8_t>& bytes, bool background);

    Stats stats() const;
    std::vector<std::string> audit() const;
    bool usingInotify() const { return _inotifyFd >= 0; }
    std::filesystem::path quarantineDir() const { return _config.submissionDir / "quarantine"; }

private:
    void watchMain();
    void enqueue(const std::string& name);
    void rescan();
    void handleFile(const std::string& fileName);
    void handleDocument(const std::string& fileName);
    void handleInterrupt(const std::string& fileName);
    void quarantine(const std::string& fileName, const std::string& error);
    void answerProtocolError(const std::string& resultPipe, const std::string& what);
    void addAudit(const std::string& entry);
    void reapBackground();

    DaemonConfig _config;
    JobService& _service;
    std::function<void()> _wake;

    std::thread _watcher;
    std::atomic_bool _stop {false};
    int _inotifyFd {-1};

    mutable std::mutex _mtx;
    std::deque<std::string> _queue;
    std::set<std::string> _queued;
    bool _rescan {false};
    std::vector<Conclusion> _concluded;
    std::vector<std::string> _audit;
    Stats _stats;

    // Touched by process() only.
    std::map<std::pair<std::string, uint32_t>, std::string> _resultPipes;
    struct Background {
        std::thread thread;
        std::shared_ptr<std::atomic_bool> done;
    };
    std::vector<Background> _background;
};

/// Creates a daemon serving `fleet` (which must host the coordinator) and
/// hooks it into the rank-0 loop. Call before fleet.start(); the daemon is
/// started here and must be destroyed after the fleet stopped.
std::unique_ptr<Daemon> attachDaemon(Fleet& fleet, DaemonConfig config);

} // namespace incrasat::bridge
