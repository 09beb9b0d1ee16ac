#include "incrasat/bridge/ipasir_session.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <unistd.h>

#include "incrasat/bridge/job_document.hpp"
#include "incrasat/model/payload_codec.hpp"

namespace incrasat::bridge {

namespace fs = std::filesystem;

std::filesystem::path defaultApiDir() {
    if (const char* env = std::getenv("INCRASAT_API_DIR"); env && *env) return env;
    return "/tmp/incrasat-api";
}

namespace {

std::atomic<uint32_t> g_sessionCounter {0};

void ignoreSigpipeOnce() {
    static std::once_flag once;
    std::call_once(once, [] {
        struct sigaction old {};
        sigaction(SIGPIPE, nullptr, &old);
        if (old.sa_handler == SIG_DFL) std::signal(SIGPIPE, SIG_IGN);
    });
}

} // namespace

IpasirSession::IpasirSession(fs::path apiDir) : _dir(std::move(apiDir)) {
    if (!fs::is_directory(_dir)) throw std::runtime_error("submission directory " + _dir.string() + " does not exist");
    if (::access(_dir.c_str(), W_OK) != 0)
        throw std::runtime_error("submission directory " + _dir.string() + " is not writable");
    fs::create_directories(_dir / "tmp");
    fs::create_directories(_dir / "pipes");
    _name = std::to_string(::getpid()) + "-" + std::to_string(g_sessionCounter++);
    ignoreSigpipeOnce();
}

IpasirSession::~IpasirSession() {
    try {
        release();
    } catch (...) {
    }
}

IpasirSession::State IpasirSession::state() const {
    std::lock_guard lock(_mtx);
    return _state;
}

void IpasirSession::add(Literal lit) {
    std::lock_guard lock(_mtx);
    if (_state == State::RELEASED) throw ContractError("add on a released session");
    if (lit == 0) {
        _staged.push_back(std::move(_pending));
        _pending.clear();
    } else {
        _maxVar = std::max(_maxVar, variableOf(lit));
        _pending.push_back(lit);
    }
    _state = State::INPUT;
}

void IpasirSession::assume(Literal lit) {
    std::lock_guard lock(_mtx);
    if (_state == State::RELEASED) throw ContractError("assume on a released session");
    if (lit == 0) throw ContractError("assumption literal must be nonzero");
    _maxVar = std::max(_maxVar, variableOf(lit));
    _assumptions.push_back(lit);
}

void IpasirSession::setTerminate(std::function<int()> callback) {
    std::lock_guard lock(_mtx);
    _terminate = std::move(callback);
}

int IpasirSession::solve() {
    RevisionPayload payload;
    {
        std::lock_guard lock(_mtx);
        if (_state == State::RELEASED) throw ContractError("solve on a released session");
        if (!_pending.empty()) throw ContractError("solve with an unterminated clause");
        payload.revision = _revision;
        payload.clauses = std::move(_staged);
        payload.assumptions = std::move(_assumptions);
        payload.maxVar = _maxVar;
        _staged.clear();
        _assumptions.clear();
        _lastAssumptions = payload.assumptions;
        _solving = true;
        _revision++;
    }
    auto start = std::chrono::steady_clock::now();
    SolveOutcome out;
    try {
        out = roundTrip(payload);
    } catch (...) {
        _solving = false;
        throw;
    }
    _lastTurnaroundMs = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    std::lock_guard lock(_mtx);
    _solving = false;
    _last = std::move(out);
    if (_state != State::RELEASED) {
        _state = _last.verdict == Verdict::SAT ? State::SAT
            : _last.verdict == Verdict::UNSAT  ? State::UNSAT
                                               : State::INPUT;
    }
    return static_cast<int>(_last.verdict);
}

SolveOutcome IpasirSession::roundTrip(const RevisionPayload& payload) {
    std::string base = _name + "." + std::to_string(payload.revision);
    auto payloadPipe = _dir / "pipes" / (base + ".payload");
    auto resultPipe = _dir / "pipes" / (base + ".result");
    std::error_code ec;
    fs::remove(payloadPipe, ec);
    fs::remove(resultPipe, ec);
    makeFifo(payloadPipe);
    makeFifo(resultPipe);
    struct Cleanup {
        fs::path a, b;
        ~Cleanup() {
            std::error_code e;
            fs::remove(a, e);
            fs::remove(b, e);
        }
    } cleanup {payloadPipe, resultPipe};

    Fd result(::open(resultPipe.c_str(), O_RDONLY | O_NONBLOCK | O_CLOEXEC));
    if (!result) throw TransportError("cannot open " + resultPipe.string() + ": " + std::strerror(errno));

    JobDocument doc;
    doc.name = _name;
    doc.revision = payload.revision;
    if (payload.revision >= 1) doc.precursor = precursorFor(_name, payload.revision);
    doc.payloadPipe = payloadPipe.string();
    doc.resultPipe = resultPipe.string();
    publishAtomically(_dir / "tmp", _dir, doc.fileName(), doc.toJson());

    std::vector<uint8_t> buf;
    auto readAvailable = [&]() {
        uint8_t chunk[65536];
        while (true) {
            ssize_t n = ::read(result.get(), chunk, sizeof chunk);
            if (n > 0) {
                buf.insert(buf.end(), chunk, chunk + n);
                continue;
            }
            if (n < 0 && errno == EINTR) continue;
            return n == 0;  // EOF
        }
    };
    auto terminateRequested = [&]() {
        std::function<int()> cb;
        {
            std::lock_guard lock(_mtx);
            cb = _terminate;
        }
        return cb && cb() != 0;
    };
    bool interrupted = false;
    auto checkTerminate = [&]() {
        if (!interrupted && terminateRequested()) {
            writeInterrupt(payload.revision);
            interrupted = true;
        }
    };

    // The payload pipe only opens for writing once the daemon opened it for
    // reading; meanwhile the daemon may already have rejected the document.
    auto bytes = encodePayload(payload);
    Fd out;
    auto lastCheck = std::chrono::steady_clock::now();
    while (true) {
        out = Fd(::open(payloadPipe.c_str(), O_WRONLY | O_NONBLOCK | O_CLOEXEC));
        if (out) break;
        if (errno != ENXIO && errno != EINTR)
            throw TransportError("cannot open " + payloadPipe.string() + ": " + std::strerror(errno));
        pollfd p {result.get(), POLLIN, 0};
        if (::poll(&p, 1, 0) > 0 && (p.revents & POLLIN)) break;
        if (std::chrono::steady_clock::now() - lastCheck > std::chrono::milliseconds(100)) {
            checkTerminate();
            lastCheck = std::chrono::steady_clock::now();
        }
        std::this_thread::sleep_for(std::chrono::microseconds(50));
    }
    if (out) {
        try {
            writeAll(out.get(), bytes, 1e9);
        } catch (const TransportError&) {
            // The daemon gave up on the payload; its answer is on the result pipe.
        }
        out.reset();
    }

    while (true) {
        pollfd p {result.get(), POLLIN, 0};
        int rc = ::poll(&p, 1, 100);
        if (rc > 0) {
            bool eof = readAvailable();
            if (size_t n = completeOutcomeSize(buf)) {
                if (n != buf.size() && eof) throw ParseError("trailing bytes after result", n);
                return decodeOutcome(std::span<const uint8_t>(buf.data(), n));
            }
            // Linux reports POLLHUP on a FIFO only after a writer connected.
            if (eof || (p.revents & POLLHUP))
                throw TransportError("result pipe closed after " + std::to_string(buf.size()) + " bytes");
        }
        checkTerminate();
    }
}

void IpasirSession::writeInterrupt(uint32_t revision) {
    publishAtomically(_dir / "tmp", _dir, _name + "." + std::to_string(revision) + ".interrupt", "");
}

Literal IpasirSession::val(int32_t var) const {
    std::lock_guard lock(_mtx);
    if (_state != State::SAT) throw ContractError("val outside of the SAT state");
    if (var <= 0) throw ContractError("val needs a positive variable");
    if (static_cast<size_t>(var) > _last.model.size()) return 0;
    return _last.model[var - 1];
}

bool IpasirSession::failed(Literal lit) const {
    std::lock_guard lock(_mtx);
    if (_state != State::UNSAT) throw ContractError("failed outside of the UNSAT state");
    if (std::find(_lastAssumptions.begin(), _lastAssumptions.end(), lit) == _lastAssumptions.end())
        throw ContractError("failed on a literal that was not assumed in the last solve");
    return std::find(_last.failed.begin(), _last.failed.end(), lit) != _last.failed.end();
}

void IpasirSession::release() {
    uint32_t rev;
    {
        std::lock_guard lock(_mtx);
        if (_state == State::RELEASED) return;
        _state = State::RELEASED;
        rev = _revision;
    }
    JobDocument doc;
    doc.name = _name;
    doc.revision = rev;
    if (rev >= 1) doc.precursor = precursorFor(_name, rev);
    doc.done = true;
    publishAtomically(_dir / "tmp", _dir, doc.fileName(), doc.toJson());
}

} // namespace incrasat::bridge
