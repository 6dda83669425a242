#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fgrf/autodiff.hpp"

namespace fgrf {

/// On-disk model snapshot. Binary, little-endian:
///   magic "FGRF", u32 version, u64 step, u64 seed,
///   u32 config length + config text,
///   u32 tensor count, then per tensor:
///     u32 name length, name bytes, u32 rank, u32 dims..., float32 payload.
/// Values are stored as float32; loading reproduces exactly what a reader of
/// the file would see.
struct Checkpoint {
  uint64_t step = 0;
  uint64_t seed = 0;
  std::string config;  // training config snapshot, key=value text
  std::map<std::string, Tensor> tensors;
};

inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Snapshot named parameters into a checkpoint / restore them from one.
/// Restoring requires every parameter to be present with a matching shape;
/// errors name the offending tensor.
void store_parameters(Checkpoint& ckpt, const std::vector<ad::Parameter*>& params);
void restore_parameters(const Checkpoint& ckpt, const std::vector<ad::Parameter*>& params);

}  // namespace fgrf
