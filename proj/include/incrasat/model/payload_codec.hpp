#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "incrasat/model/bytes.hpp"
#include "incrasat/model/types.hpp"

namespace incrasat {

constexpr uint32_t kPayloadMagic = 0x4D414C31;
constexpr size_t kPayloadHeaderSize = 4 + 4 + 4 + 8 + 8;

// Wire layout (little-endian):
//   u32 magic | u32 revision | u32 max_var | u64 n_clause_ints | u64 n_assumption_ints
//   n_clause_ints x i32 (each clause 0-terminated) | n_assumption_ints x i32
std::vector<uint8_t> encodePayload(const RevisionPayload& payload);
RevisionPayload decodePayload(std::span<const uint8_t> bytes);

// Result pipe layout: u8 verdict (10/20/0) | u64 count | count x i32.
// SAT carries the model, UNSAT the failed assumptions, UNKNOWN nothing.
std::vector<uint8_t> encodeOutcome(const SolveOutcome& outcome);
SolveOutcome decodeOutcome(std::span<const uint8_t> bytes);

} // namespace incrasat
