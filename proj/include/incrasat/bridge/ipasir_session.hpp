#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "incrasat/bridge/pipe_io.hpp"
#include "incrasat/model/types.hpp"

namespace incrasat::bridge {

class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// INCRASAT_API_DIR if set, else /tmp/incrasat-api.
std::filesystem::path defaultApiDir();

/// Client side of the bridge with IPASIR call semantics. One session is one
/// incremental job; each solve() is one revision.
class IpasirSession {
public:
    enum class State { INPUT, SAT, UNSAT, RELEASED };

    /// Throws std::runtime_error naming the path if the submission directory
    /// is missing or not writable.
    explicit IpasirSession(std::filesystem::path apiDir = defaultApiDir());
    ~IpasirSession();
    IpasirSession(const IpasirSession&) = delete;
    IpasirSession& operator=(const IpasirSession&) = delete;

    void add(Literal lit);
    void assume(Literal lit);
    /// 10 (SAT), 20 (UNSAT) or 0 (interrupted / unknown). Throws
    /// TransportError if the daemon closes the result pipe early and
    /// ParseError on a malformed result.
    int solve();
    Literal val(int32_t var) const;
    bool failed(Literal lit) const;
    /// Polled at least every 100 ms during solve(); returning nonzero
    /// interrupts the running revision.
    void setTerminate(std::function<int()> callback);
    /// Finalizes the job. Safe to call from another thread during solve();
    /// a second call is a no-op.
    void release();

    const std::string& jobName() const { return _name; }
    State state() const;
    /// Number of solve calls issued so far.
    uint32_t revisions() const { return _revision; }
    double lastTurnaroundMs() const { return _lastTurnaroundMs; }

private:
    SolveOutcome roundTrip(const RevisionPayload& payload);
    void writeInterrupt(uint32_t revision);

    std::filesystem::path _dir;
    std::string _name;
    mutable std::mutex _mtx;
    State _state {State::INPUT};
    std::atomic<uint32_t> _revision {0};
    std::atomic_bool _solving {false};

    std::vector<Clause> _staged;
    Clause _pending;
    std::vector<Literal> _assumptions;
    std::vector<Literal> _lastAssumptions;
    uint32_t _maxVar {0};
    SolveOutcome _last;
    std::function<int()> _terminate;
    double _lastTurnaroundMs {0};
};

} // namespace incrasat::bridge
