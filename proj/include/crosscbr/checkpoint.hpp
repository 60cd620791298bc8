#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "crosscbr/encoder.hpp"
#include "crosscbr/optimizer.hpp"

namespace crosscbr {

// Binary checkpoint layout, all integers and doubles little-endian:
//
//   bytes 0..7   magic "CCBRCKPT"
//   u32          format version (1)
//   u64 x 4      M, N, O, d
//   u64          training epoch counter
//   f64 x M*d    user table, row-major
//   f64 x N*d    bundle table
//   f64 x O*d    item table
//   u8           1 if an optimizer section follows, else 0
//   [u64 step, then first moments (users, bundles, items), then second
//    moments, same shapes and order as the tables]
//
// Doubles are stored bit-exactly, so save/load round-trips losslessly.
struct Checkpoint {
  EmbeddingState state;
  std::uint64_t epoch = 0;
  std::optional<AdamState> adam;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& file);
Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace crosscbr
