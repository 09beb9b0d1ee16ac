#pragma once

#include <functional>
#include <vector>

#include "incrasat/bridge/ipasir_session.hpp"
#include "incrasat/model/types.hpp"

namespace incrasat::harness {

/// Bounded reachability of an n-bit binary counter from 0 to all-ones.
/// Revision k adds the transition from step k-1 to step k and assumes the
/// goal on the state of step k, so revisions 0..2^n-2 are UNSAT and
/// revision 2^n-1 is SAT.
///
/// Each transition has an enable bit e: the counter adds e (it may stutter),
/// which makes the goal "reachable within k steps".
class CounterEncoding {
public:
    explicit CounterEncoding(int bits);

    int bits() const { return _bits; }
    uint32_t revisions() const { return 1u << _bits; }
    /// Variable of bit i of the state after `step` transitions.
    int stateVar(uint32_t step, int bit) const;
    int enableVar(uint32_t transition) const;
    int carryVar(uint32_t transition, int bit) const;
    uint32_t maxVar(uint32_t revision) const;

    RevisionPayload revision(uint32_t k) const;

private:
    int _bits;
};

/// Drives the counter through an IPASIR session: one solve per revision.
/// Returns the IPASIR result codes. `afterSolve` (optional) runs after
/// every solve with the revision index.
std::vector<int> runCounterApp(int bits, bridge::IpasirSession& session,
                               const std::function<void(uint32_t)>& afterSolve = {});

} // namespace incrasat::harness
