#include "incrasat/transport/transport.hpp"

#include <algorithm>

#include "incrasat/model/bytes.hpp"

namespace incrasat {

const char* nameOf(Tag tag) {
    switch (tag) {
    case Tag::JOB_REQUEST: return "JOB_REQUEST";
    case Tag::PAYLOAD_CHUNK: return "PAYLOAD_CHUNK";
    case Tag::VOLUME_UPDATE: return "VOLUME_UPDATE";
    case Tag::CLAUSE_BATCH: return "CLAUSE_BATCH";
    case Tag::RESULT: return "RESULT";
    case Tag::SUSPEND: return "SUSPEND";
    case Tag::RESUME: return "RESUME";
    case Tag::FINALIZE: return "FINALIZE";
    case Tag::CANCEL: return "CANCEL";
    }
    return "?";
}

void Transport::checkEnvelope(const Envelope& env) const {
    if (env.dest < 0 || env.dest >= size())
        throw RoutingError("unknown destination rank " + std::to_string(env.dest));
    if (env.body.size() > _maxMessageSize)
        throw RoutingError("message body of " + std::to_string(env.body.size())
                           + " bytes exceeds the limit of " + std::to_string(_maxMessageSize)
                           + " bytes; send it chunked");
}

std::vector<Envelope> splitIntoChunks(Tag innerTag, int source, int dest,
                                      const std::vector<uint8_t>& body,
                                      size_t maxMessageSize, uint64_t transferId) {
    if (maxMessageSize <= kChunkHeaderSize) throw RoutingError("message size limit too small for chunking");
    size_t perChunk = maxMessageSize - kChunkHeaderSize;
    uint32_t count = static_cast<uint32_t>(std::max<size_t>(1, (body.size() + perChunk - 1) / perChunk));
    std::vector<Envelope> out;
    out.reserve(count);
    for (uint32_t i = 0; i < count; i++) {
        size_t begin = i * perChunk;
        size_t end = std::min(body.size(), begin + perChunk);
        ByteWriter w(kChunkHeaderSize + (end - begin));
        w.u64(transferId);
        w.u32(i);
        w.u32(count);
        w.u16(static_cast<uint16_t>(innerTag));
        w.bytes(std::span<const uint8_t>(body.data() + begin, end - begin));
        out.push_back({Tag::PAYLOAD_CHUNK, source, dest, w.take(), 0});
    }
    return out;
}

std::optional<Envelope> ChunkAssembler::accept(const Envelope& chunk) {
    ByteReader r(chunk.body);
    uint64_t transfer = r.u64();
    uint32_t index = r.u32();
    uint32_t count = r.u32();
    auto inner = static_cast<Tag>(r.u16());
    auto data = r.rest();

    if (count == 0 || index >= count) throw ParseError("invalid chunk framing", 8);
    auto key = std::make_pair(chunk.source, transfer);
    if (count == 1) return Envelope {inner, chunk.source, chunk.dest, {data.begin(), data.end()}, chunk.seq};

    auto it = _partial.find(key);
    if (it == _partial.end()) {
        if (index != 0) throw ParseError("chunk transfer does not start at index 0", 8);
        it = _partial.emplace(key, Partial {inner, count, 0, {}}).first;
    }
    auto& p = it->second;
    if (index != p.next || count != p.count) throw ParseError("out-of-order chunk", 8);
    p.data.insert(p.data.end(), data.begin(), data.end());
    p.next++;
    if (p.next < p.count) return std::nullopt;
    Envelope env {p.innerTag, chunk.source, chunk.dest, std::move(p.data), chunk.seq};
    _partial.erase(it);
    return env;
}

void ChunkingSender::send(Transport& transport, Envelope env) {
    // PAYLOAD_CHUNK bodies always carry chunk framing, even for a single chunk.
    if (env.tag != Tag::PAYLOAD_CHUNK && env.body.size() <= transport.maxMessageSize()) {
        transport.send(std::move(env));
        return;
    }
    for (auto& chunk : splitIntoChunks(env.tag, env.source, env.dest, env.body,
                                       transport.maxMessageSize(), (uint64_t(_rank) << 40) | _nextTransfer++)) {
        transport.send(std::move(chunk));
    }
}

} // namespace incrasat
