#include "incrasat/model/payload_codec.hpp"

namespace incrasat {

std::vector<uint8_t> encodePayload(const RevisionPayload& payload) {
    payload.validate();

    uint64_t nClauseInts = 0;
    for (const auto& c : payload.clauses) nClauseInts += c.size() + 1;
    uint64_t nAssumptionInts = payload.assumptions.size();

    ByteWriter w(kPayloadHeaderSize + 4 * (nClauseInts + nAssumptionInts));
    w.u32(kPayloadMagic);
    w.u32(payload.revision);
    w.u32(payload.maxVar);
    w.u64(nClauseInts);
    w.u64(nAssumptionInts);
    for (const auto& c : payload.clauses) {
        for (Literal l : c) w.i32(l);
        w.i32(0);
    }
    for (Literal l : payload.assumptions) w.i32(l);
    return w.take();
}

RevisionPayload decodePayload(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    if (bytes.size() < kPayloadHeaderSize) throw ParseError("truncated payload header", bytes.size());
    if (r.u32() != kPayloadMagic) throw ParseError("bad payload magic", 0);

    RevisionPayload p;
    p.revision = r.u32();
    p.maxVar = r.u32();
    if (p.maxVar > kMaxVariableCount) throw ParseError("max_var exceeds variable cap", 8);
    uint64_t nClauseInts = r.u64();
    uint64_t nAssumptionInts = r.u64();

    uint64_t body = r.remaining();
    if (nClauseInts > body / 4 || nAssumptionInts > body / 4
        || 4 * (nClauseInts + nAssumptionInts) != body) {
        throw ParseError("declared counts (" + std::to_string(nClauseInts) + " clause ints, "
                             + std::to_string(nAssumptionInts) + " assumption ints) do not match body length "
                             + std::to_string(body),
                         kPayloadHeaderSize);
    }

    auto checkVar = [&](Literal l, size_t at) {
        if (variableOf(l) > p.maxVar)
            throw ParseError("literal " + std::to_string(l) + " exceeds max_var", at);
    };

    Clause current;
    for (uint64_t i = 0; i < nClauseInts; i++) {
        size_t at = r.offset();
        Literal l = r.i32();
        if (l == 0) {
            p.clauses.push_back(std::move(current));
            current.clear();
        } else {
            checkVar(l, at);
            current.push_back(l);
        }
    }
    if (!current.empty()) throw ParseError("clause section not 0-terminated", r.offset());

    p.assumptions.reserve(nAssumptionInts);
    for (uint64_t i = 0; i < nAssumptionInts; i++) {
        size_t at = r.offset();
        Literal l = r.i32();
        if (l == 0) throw ParseError("zero literal in assumption section", at);
        checkVar(l, at);
        p.assumptions.push_back(l);
    }
    return p;
}

std::vector<uint8_t> encodeOutcome(const SolveOutcome& outcome) {
    const std::vector<Literal>* lits = nullptr;
    if (outcome.verdict == Verdict::SAT) lits = &outcome.model;
    if (outcome.verdict == Verdict::UNSAT) lits = &outcome.failed;
    size_t n = lits ? lits->size() : 0;
    ByteWriter w(9 + 4 * n);
    w.u8(static_cast<uint8_t>(outcome.verdict));
    w.u64(n);
    if (lits)
        for (Literal l : *lits) w.i32(l);
    return w.take();
}

SolveOutcome decodeOutcome(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    uint8_t code = r.u8();
    SolveOutcome out;
    switch (code) {
    case 0: out.verdict = Verdict::UNKNOWN; break;
    case 10: out.verdict = Verdict::SAT; break;
    case 20: out.verdict = Verdict::UNSAT; break;
    default: throw ParseError("unknown verdict code " + std::to_string(code), 0);
    }
    uint64_t n = r.u64();
    if (n > r.remaining() / 4 || 4 * n != r.remaining())
        throw ParseError("result count does not match body length", 1);
    std::vector<Literal> lits(n);
    for (auto& l : lits) l = r.i32();
    if (out.verdict == Verdict::SAT) out.model = std::move(lits);
    else if (out.verdict == Verdict::UNSAT) out.failed = std::move(lits);
    else if (n != 0) throw ParseError("UNKNOWN result with a literal body", 9);
    return out;
}

} // namespace incrasat
