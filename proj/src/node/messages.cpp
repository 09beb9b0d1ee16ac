#include "incrasat/node/messages.hpp"

#include "incrasat/model/payload_codec.hpp"

namespace incrasat {

std::vector<uint8_t> NodeAssignmentMsg::encode() const {
    ByteWriter w;
    w.u64(job);
    w.u32(index);
    w.u32(revision);
    return w.take();
}

NodeAssignmentMsg NodeAssignmentMsg::decode(std::span<const uint8_t> body) {
    ByteReader r(body);
    NodeAssignmentMsg m;
    m.job = r.u64();
    m.index = r.u32();
    m.revision = r.u32();
    return m;
}

std::vector<uint8_t> SuspendMsg::encode() const {
    ByteWriter w;
    w.u64(job);
    w.u32(index);
    return w.take();
}

SuspendMsg SuspendMsg::decode(std::span<const uint8_t> body) {
    ByteReader r(body);
    SuspendMsg m;
    m.job = r.u64();
    m.index = r.u32();
    return m;
}

std::vector<uint8_t> VolumeUpdateMsg::encode() const {
    ByteWriter w;
    w.u64(job);
    w.u32(revision);
    w.i32s(hosts);
    return w.take();
}

VolumeUpdateMsg VolumeUpdateMsg::decode(std::span<const uint8_t> body) {
    ByteReader r(body);
    VolumeUpdateMsg m;
    m.job = r.u64();
    m.revision = r.u32();
    m.hosts = r.i32s();
    return m;
}

std::vector<uint8_t> PayloadMsg::encode() const {
    ByteWriter w(12 + payload.size());
    w.u64(job);
    w.u32(index);
    w.bytes(payload);
    return w.take();
}

PayloadMsg PayloadMsg::decode(std::span<const uint8_t> body) {
    ByteReader r(body);
    PayloadMsg m;
    m.job = r.u64();
    m.index = r.u32();
    auto rest = r.rest();
    m.payload.assign(rest.begin(), rest.end());
    return m;
}

std::vector<uint8_t> ResultMsg::encode() const {
    auto enc = encodeOutcome(outcome);
    ByteWriter w(24 + enc.size());
    w.u64(job);
    w.u32(revision);
    w.u32(index);
    w.f64(outcome.wallclockMs);
    w.bytes(enc);
    return w.take();
}

ResultMsg ResultMsg::decode(std::span<const uint8_t> body) {
    ByteReader r(body);
    ResultMsg m;
    m.job = r.u64();
    m.revision = r.u32();
    m.index = r.u32();
    double ms = r.f64();
    m.outcome = decodeOutcome(r.rest());
    m.outcome.wallclockMs = ms;
    return m;
}

std::vector<uint8_t> CancelMsg::encode() const {
    ByteWriter w;
    w.u64(job);
    w.u32(revision);
    return w.take();
}

CancelMsg CancelMsg::decode(std::span<const uint8_t> body) {
    ByteReader r(body);
    CancelMsg m;
    m.job = r.u64();
    m.revision = r.u32();
    return m;
}

std::vector<uint8_t> FinalizeMsg::encode() const {
    ByteWriter w;
    w.u64(job);
    return w.take();
}

FinalizeMsg FinalizeMsg::decode(std::span<const uint8_t> body) {
    ByteReader r(body);
    return {r.u64()};
}

std::vector<uint8_t> ClauseBatchMsg::encode() const {
    ByteWriter w;
    w.u64(job);
    w.u8(static_cast<uint8_t>(kind));
    w.u64(epoch);
    w.u32(fromIndex);
    w.u32(toIndex);
    sat::writeBatch(w, batch);
    return w.take();
}

ClauseBatchMsg ClauseBatchMsg::decode(std::span<const uint8_t> body) {
    ByteReader r(body);
    ClauseBatchMsg m;
    m.job = r.u64();
    m.kind = static_cast<BatchKind>(r.u8());
    m.epoch = r.u64();
    m.fromIndex = r.u32();
    m.toIndex = r.u32();
    m.batch = sat::readBatch(r);
    return m;
}

} // namespace incrasat
