#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace incrasat {

constexpr size_t kDefaultMaxMessageSize = 16u << 20;

enum class Tag : uint16_t {
    JOB_REQUEST = 1,
    PAYLOAD_CHUNK = 2,
    VOLUME_UPDATE = 3,
    CLAUSE_BATCH = 4,
    RESULT = 5,
    SUSPEND = 6,
    RESUME = 7,
    FINALIZE = 8,
    CANCEL = 9,
};

const char* nameOf(Tag tag);

struct Envelope {
    Tag tag {Tag::JOB_REQUEST};
    int source {0};
    int dest {0};
    std::vector<uint8_t> body;
    // Per (source, dest) sequence number, assigned on send.
    uint64_t seq {0};
};

class RoutingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reliable, per-pair FIFO message passing between W ranks.
/// send() may be called from any thread; poll() and waitForMessage() only
/// from the thread owning the polled rank.
class Transport {
public:
    explicit Transport(size_t maxMessageSize) : _maxMessageSize(maxMessageSize) {}
    virtual ~Transport() = default;

    virtual int size() const = 0;
    /// Throws RoutingError for an unknown destination or an oversized body.
    virtual void send(Envelope env) = 0;
    /// Non-blocking; at most `budget` envelopes in delivery order.
    virtual std::vector<Envelope> poll(int rank, size_t budget) = 0;
    /// Blocks until a message is pending for `rank`, wake() was called, or
    /// the timeout passed. Returns true if a message is pending.
    virtual bool waitForMessage(int rank, double timeoutMs) = 0;
    virtual void wake(int rank) = 0;

    size_t maxMessageSize() const { return _maxMessageSize; }

protected:
    void checkEnvelope(const Envelope& env) const;

private:
    size_t _maxMessageSize;
};

// Chunk framing carried in PAYLOAD_CHUNK bodies:
//   u64 transfer_id | u32 chunk_index | u32 chunk_count | u16 inner_tag | data
constexpr size_t kChunkHeaderSize = 8 + 4 + 4 + 2;

/// Splits a logical message of arbitrary size into PAYLOAD_CHUNK envelopes
/// that each fit within maxMessageSize.
std::vector<Envelope> splitIntoChunks(Tag innerTag, int source, int dest,
                                      const std::vector<uint8_t>& body,
                                      size_t maxMessageSize, uint64_t transferId);

/// Reassembles chunked transfers. Chunks of one transfer travel over a single
/// FIFO pair, so they arrive in index order.
class ChunkAssembler {
public:
    /// Returns the reassembled logical envelope (with its inner tag) once the
    /// last chunk of a transfer arrived.
    std::optional<Envelope> accept(const Envelope& chunk);
    size_t pendingTransfers() const { return _partial.size(); }

private:
    struct Partial {
        Tag innerTag;
        uint32_t count;
        uint32_t next;
        std::vector<uint8_t> data;
    };
    std::map<std::pair<int, uint64_t>, Partial> _partial;
};

/// Sends `env` as-is if it fits, otherwise as a chunked transfer. Envelopes
/// tagged PAYLOAD_CHUNK are always framed (inner tag PAYLOAD_CHUNK).
/// Transfer ids are (rank << 40) | counter; a second sender on the same rank
/// must start its counter in a disjoint range.
class ChunkingSender {
public:
    explicit ChunkingSender(int rank, uint64_t firstTransfer = 1) : _rank(rank), _nextTransfer(firstTransfer) {}
    void send(Transport& transport, Envelope env);
private:
    int _rank;
    std::atomic<uint64_t> _nextTransfer;
};

} // namespace incrasat
