#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "incrasat/model/types.hpp"
#include "incrasat/sat/sharing.hpp"

namespace incrasat {

// Bodies of the scheduler / revision protocol envelopes.

// JOB_REQUEST and RESUME: host `index` of `job` and work on `revision`.
struct NodeAssignmentMsg {
    uint64_t job {0};
    uint32_t index {0};
    uint32_t revision {0};

    std::vector<uint8_t> encode() const;
    static NodeAssignmentMsg decode(std::span<const uint8_t> body);
};

// SUSPEND: leave the tree; state is retained.
struct SuspendMsg {
    uint64_t job {0};
    uint32_t index {0};

    std::vector<uint8_t> encode() const;
    static SuspendMsg decode(std::span<const uint8_t> body);
};

// VOLUME_UPDATE: current volume and hosts of indices 0..volume-1.
struct VolumeUpdateMsg {
    uint64_t job {0};
    uint32_t revision {0};
    std::vector<int32_t> hosts;

    uint32_t volume() const { return static_cast<uint32_t>(hosts.size()); }
    std::vector<uint8_t> encode() const;
    static VolumeUpdateMsg decode(std::span<const uint8_t> body);
};

// Logical body carried by PAYLOAD_CHUNK transfers.
struct PayloadMsg {
    uint64_t job {0};
    uint32_t index {0};
    std::vector<uint8_t> payload;

    std::vector<uint8_t> encode() const;
    static PayloadMsg decode(std::span<const uint8_t> body);
};

struct ResultMsg {
    uint64_t job {0};
    uint32_t revision {0};
    uint32_t index {0};
    SolveOutcome outcome;

    std::vector<uint8_t> encode() const;
    static ResultMsg decode(std::span<const uint8_t> body);
};

// CANCEL: stop working on `revision` without leaving the tree.
struct CancelMsg {
    uint64_t job {0};
    uint32_t revision {0};

    std::vector<uint8_t> encode() const;
    static CancelMsg decode(std::span<const uint8_t> body);
};

struct FinalizeMsg {
    uint64_t job {0};

    std::vector<uint8_t> encode() const;
    static FinalizeMsg decode(std::span<const uint8_t> body);
};

enum class BatchKind : uint8_t { GATHER = 1, CONTRIBUTION = 2, BROADCAST = 3 };

struct ClauseBatchMsg {
    uint64_t job {0};
    BatchKind kind {BatchKind::GATHER};
    uint64_t epoch {0};
    uint32_t fromIndex {0};
    uint32_t toIndex {0};
    sat::AggregatedBatch batch;

    std::vector<uint8_t> encode() const;
    static ClauseBatchMsg decode(std::span<const uint8_t> body);
};

} // namespace incrasat
