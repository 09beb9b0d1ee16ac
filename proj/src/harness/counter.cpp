#include "incrasat/harness/counter.hpp"

#include <stdexcept>

namespace incrasat::harness {

CounterEncoding::CounterEncoding(int bits) : _bits(bits) {
    if (bits < 1 || bits > 16) throw std::invalid_argument("counter width must be in 1..16");
}

// Step 0 uses variables 1..n. Transition t (t >= 0) owns 2n variables:
// e_t, the carries c_{t,1..n-1} and the next state s_{t+1,0..n-1}.
int CounterEncoding::stateVar(uint32_t step, int bit) const {
    if (step == 0) return bit + 1;
    return _bits + 2 * _bits * (step - 1) + _bits + bit + 1;
}

int CounterEncoding::enableVar(uint32_t t) const { return _bits + 2 * _bits * t + 1; }

int CounterEncoding::carryVar(uint32_t t, int bit) const {
    return bit == 0 ? enableVar(t) : _bits + 2 * _bits * t + bit + 1;
}

uint32_t CounterEncoding::maxVar(uint32_t revision) const { return _bits + 2 * _bits * revision; }

RevisionPayload CounterEncoding::revision(uint32_t k) const {
    if (k >= revisions()) throw std::out_of_range("counter revision out of range");
    RevisionPayload p;
    p.revision = k;
    p.maxVar = maxVar(k);
    if (k == 0) {
        for (int i = 0; i < _bits; i++) p.clauses.push_back({-stateVar(0, i)});
    } else {
        uint32_t t = k - 1;
        for (int i = 0; i < _bits; i++) {
            int s = stateVar(t, i), c = carryVar(t, i), y = stateVar(t + 1, i);
            // y = s xor c
            p.clauses.push_back({-y, s, c});
            p.clauses.push_back({-y, -s, -c});
            p.clauses.push_back({y, -s, c});
            p.clauses.push_back({y, s, -c});
            if (i + 1 < _bits) {
                // next carry = s and c
                int z = carryVar(t, i + 1);
                p.clauses.push_back({-z, s});
                p.clauses.push_back({-z, c});
                p.clauses.push_back({z, -s, -c});
            }
        }
    }
    for (int i = 0; i < _bits; i++) p.assumptions.push_back(stateVar(k, i));
    return p;
}

std::vector<int> runCounterApp(int bits, bridge::IpasirSession& session,
                               const std::function<void(uint32_t)>& afterSolve) {
    CounterEncoding enc(bits);
    std::vector<int> verdicts;
    for (uint32_t k = 0; k < enc.revisions(); k++) {
        auto p = enc.revision(k);
        for (auto& c : p.clauses) {
            for (auto l : c) session.add(l);
            session.add(0);
        }
        for (auto a : p.assumptions) session.assume(a);
        verdicts.push_back(session.solve());
        if (afterSolve) afterSolve(k);
    }
    return verdicts;
}

} // namespace incrasat::harness
