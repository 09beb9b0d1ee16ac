#include "incrasat/bridge/daemon.hpp"

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <sys/inotify.h>
#include <unistd.h>

#include "incrasat/bridge/job_document.hpp"
#include "incrasat/bridge/pipe_io.hpp"
#include "incrasat/model/payload_codec.hpp"

namespace incrasat::bridge {

namespace fs = std::filesystem;

namespace {

bool interesting(const std::string& name) {
    auto ends = [&](const std::string& s) {
        return name.size() > s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
    };
    return ends(".json") || ends(".interrupt");
}

std::optional<std::string> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

Daemon::Daemon(DaemonConfig config, JobService& service, std::function<void()> wake)
    : _config(std::move(config)), _service(service), _wake(std::move(wake)) {}

Daemon::~Daemon() { stop(); }

void Daemon::start() {
    const auto& dir = _config.submissionDir;
    if (!fs::is_directory(dir)) throw std::runtime_error("submission directory " + dir.string() + " does not exist");
    fs::create_directories(dir / "quarantine");
    fs::create_directories(dir / "tmp");
    fs::create_directories(dir / "pipes");
    // A client that vanished must not kill the daemon on a result write.
    std::signal(SIGPIPE, SIG_IGN);

    if (_config.useInotify) {
        _inotifyFd = ::inotify_init1(IN_NONBLOCK | IN_CLOEXEC);
        if (_inotifyFd >= 0 && ::inotify_add_watch(_inotifyFd, dir.c_str(), IN_CLOSE_WRITE | IN_MOVED_TO) < 0) {
            ::close(_inotifyFd);
            _inotifyFd = -1;
        }
    }
    {
        // Files that arrived before the watch existed.
        std::lock_guard lock(_mtx);
        _rescan = true;
    }
    _stop = false;
    _watcher = std::thread([this] { watchMain(); });
}

void Daemon::stop() {
    _stop = true;
    if (_watcher.joinable()) _watcher.join();
    if (_inotifyFd >= 0) ::close(_inotifyFd);
    _inotifyFd = -1;
    for (auto& b : _background)
        if (b.thread.joinable()) b.thread.join();
    _background.clear();
}

void Daemon::enqueue(const std::string& name) {
    {
        std::lock_guard lock(_mtx);
        if (!_queued.insert(name).second) return;
        _queue.push_back(name);
    }
    if (_wake) _wake();
}

void Daemon::watchMain() {
    if (_inotifyFd < 0) {
        auto period = std::chrono::microseconds(static_cast<int64_t>(_config.fallbackPollMs * 1000));
        while (!_stop) {
            {
                std::lock_guard lock(_mtx);
                _rescan = true;
            }
            if (_wake) _wake();
            std::this_thread::sleep_for(period);
        }
        return;
    }
    alignas(inotify_event) char buf[64 * 1024];
    while (!_stop) {
        pollfd p {_inotifyFd, POLLIN, 0};
        if (::poll(&p, 1, 50) <= 0) continue;
        ssize_t n = ::read(_inotifyFd, buf, sizeof buf);
        if (n <= 0) continue;
        for (char* ptr = buf; ptr < buf + n;) {
            auto* ev = reinterpret_cast<inotify_event*>(ptr);
            ptr += sizeof(inotify_event) + ev->len;
            if (ev->mask & IN_Q_OVERFLOW) {
                {
                    std::lock_guard lock(_mtx);
                    _rescan = true;
                }
                if (_wake) _wake();
                continue;
            }
            if (ev->len == 0 || (ev->mask & IN_ISDIR)) continue;
            std::string name(ev->name);
            if (interesting(name)) enqueue(name);
        }
    }
}

void Daemon::rescan() {
    std::vector<std::pair<fs::file_time_type, std::string>> found;
    std::error_code ec;
    for (auto& e : fs::directory_iterator(_config.submissionDir, ec)) {
        if (!e.is_regular_file(ec)) continue;
        auto name = e.path().filename().string();
        if (!interesting(name)) continue;
        found.emplace_back(e.last_write_time(ec), name);
    }
    std::sort(found.begin(), found.end());
    std::lock_guard lock(_mtx);
    for (auto& [t, name] : found)
        if (_queued.insert(name).second) _queue.push_back(name);
}

void Daemon::process() {
    reapBackground();
    bool rescanNow;
    {
        std::lock_guard lock(_mtx);
        rescanNow = _rescan;
        _rescan = false;
    }
    if (rescanNow) rescan();
    std::deque<std::string> names;
    {
        std::lock_guard lock(_mtx);
        names.swap(_queue);
        _queued.clear();
    }
    for (auto& n : names) handleFile(n);

    std::vector<Conclusion> concluded;
    {
        std::lock_guard lock(_mtx);
        concluded.swap(_concluded);
    }
    for (auto& c : concluded) {
        auto it = _resultPipes.find({c.job, c.revision});
        if (it == _resultPipes.end()) continue;
        auto pipe = it->second;
        _resultPipes.erase(it);
        auto bytes = encodeOutcome(c.outcome);
        deliver(pipe, bytes, bytes.size() > _config.inlineResultLimit);
    }
}

void Daemon::onConclusion(const Conclusion& c) {
    std::lock_guard lock(_mtx);
    _concluded.push_back(c);
}

void Daemon::handleFile(const std::string& fileName) {
    if (!fs::exists(_config.submissionDir / fileName)) return;
    if (fileName.size() > 10 && fileName.compare(fileName.size() - 10, 10, ".interrupt") == 0)
        handleInterrupt(fileName);
    else
        handleDocument(fileName);
}

void Daemon::handleDocument(const std::string& fileName) {
    auto path = _config.submissionDir / fileName;
    auto text = slurp(path);
    if (!text) return;
    {
        std::lock_guard lock(_mtx);
        _stats.documents++;
    }
    auto split = splitDocumentName(fileName, "json");
    JobDocument doc;
    try {
        if (!split) throw ProtocolError("file name must be <name>.<revision>.json");
        doc = JobDocument::parse(*text);
        if (doc.name != split->first || doc.revision != split->second)
            throw ProtocolError("file name does not match name and revision of the document");
    } catch (const ProtocolError& e) {
        quarantine(fileName, e.what());
        if (auto pipe = JobDocument::salvageResultPipe(*text)) answerProtocolError(*pipe, fileName + ": " + e.what());
        return;
    }
    std::error_code ec;
    fs::remove(path, ec);

    if (doc.done) {
        try {
            if (_service.solving(doc.name)) _service.cancel(doc.name);
            _service.finalize(doc.name);
        } catch (const std::exception& e) {
            addAudit("finalize of " + doc.name + " failed: " + e.what());
        }
        std::lock_guard lock(_mtx);
        _stats.finalized++;
        return;
    }

    RevisionPayload payload;
    try {
        Fd fd(::open(doc.payloadPipe.c_str(), O_RDONLY | O_NONBLOCK | O_CLOEXEC));
        if (!fd) throw TransportError("cannot open payload pipe " + doc.payloadPipe + ": " + std::strerror(errno));
        auto bytes = readPayload(fd.get(), _config.payloadTimeoutMs);
        payload = decodePayload(bytes);
        if (payload.revision != doc.revision)
            throw ProtocolError("payload revision " + std::to_string(payload.revision) + " in document for revision "
                                + std::to_string(doc.revision));
        _resultPipes[{doc.name, doc.revision}] = doc.resultPipe;
        _service.submit(doc.name, std::move(payload));
    } catch (const std::exception& e) {
        _resultPipes.erase({doc.name, doc.revision});
        answerProtocolError(doc.resultPipe, fileName + ": " + e.what());
        return;
    }
    std::lock_guard lock(_mtx);
    _stats.submitted++;
}

void Daemon::handleInterrupt(const std::string& fileName) {
    std::error_code ec;
    fs::remove(_config.submissionDir / fileName, ec);
    auto split = splitDocumentName(fileName, "interrupt");
    if (!split) {
        addAudit("ignored malformed interrupt marker " + fileName);
        return;
    }
    {
        std::lock_guard lock(_mtx);
        _stats.interrupts++;
    }
    auto& [name, rev] = *split;
    // Only the revision named in the marker; a late marker must not hit its successor.
    if (_service.solving(name) && _service.nextRevision(name) == rev + 1) _service.cancel(name);
}

void Daemon::quarantine(const std::string& fileName, const std::string& error) {
    auto q = quarantineDir();
    std::error_code ec;
    fs::create_directories(q, ec);
    fs::rename(_config.submissionDir / fileName, q / fileName, ec);
    std::ofstream(q / (fileName + ".error")) << error << "\n";
    addAudit("quarantined " + fileName + ": " + error);
    std::lock_guard lock(_mtx);
    _stats.quarantined++;
}

void Daemon::answerProtocolError(const std::string& resultPipe, const std::string& what) {
    addAudit("protocol error: " + what);
    deliver(resultPipe, encodeOutcome(SolveOutcome::unknown()), false);
}

bool Daemon::deliver(const fs::path& resultPipe, const std::vector<uint8_t>& bytes, bool background) {
    Fd fd(::open(resultPipe.c_str(), O_WRONLY | O_NONBLOCK | O_CLOEXEC));
    if (!fd) {
        addAudit("result dropped, cannot open " + resultPipe.string() + ": " + std::strerror(errno));
        return false;
    }
    if (!background) {
        try {
            writeAll(fd.get(), bytes, _config.resultTimeoutMs);
        } catch (const TransportError& e) {
            addAudit("result dropped on " + resultPipe.string() + ": " + e.what());
            return false;
        }
        std::lock_guard lock(_mtx);
        _stats.inlineResults++;
        return true;
    }
    auto done = std::make_shared<std::atomic_bool>(false);
    auto thread = std::thread([this, fd = std::move(fd), bytes, resultPipe, done]() mutable {
        try {
            writeAll(fd.get(), bytes, _config.resultTimeoutMs);
        } catch (const TransportError& e) {
            addAudit("result dropped on " + resultPipe.string() + ": " + e.what());
        }
        fd.reset();
        *done = true;
        if (_wake) _wake();
    });
    _background.push_back({std::move(thread), done});
    std::lock_guard lock(_mtx);
    _stats.backgroundResults++;
    return true;
}

void Daemon::reapBackground() {
    for (auto it = _background.begin(); it != _background.end();) {
        if (*it->done) {
            it->thread.join();
            it = _background.erase(it);
        } else {
            ++it;
        }
    }
}

void Daemon::addAudit(const std::string& entry) {
    std::lock_guard lock(_mtx);
    _audit.push_back(entry);
}

Daemon::Stats Daemon::stats() const {
    std::lock_guard lock(_mtx);
    return _stats;
}

std::vector<std::string> Daemon::audit() const {
    std::lock_guard lock(_mtx);
    return _audit;
}

std::unique_ptr<Daemon> attachDaemon(Fleet& fleet, DaemonConfig config) {
    if (!fleet.hasCoordinator()) throw std::logic_error("the daemon needs the coordinator rank");
    auto daemon = std::make_unique<Daemon>(std::move(config), fleet.coordinator(), [&fleet] { fleet.wake(0); });
    Daemon* d = daemon.get();
    fleet.coordinator().addConclusionListener([d](const Conclusion& c) { d->onConclusion(c); });
    fleet.addRank0Hook([d](double) { d->process(); });
    daemon->start();
    return daemon;
}

} // namespace incrasat::bridge
