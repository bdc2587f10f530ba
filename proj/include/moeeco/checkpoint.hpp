#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moeeco/model.hpp"
#include "moeeco/optimizer.hpp"

namespace moeeco {

// Little-endian binary checkpoint:
//   magic "MOEECO01" | u32 version | u32 len + config text |
//   u64 epoch_completed | u64 global_step | u64 adam_step | u64 seed |
//   u32 tensor count | tensors (u32 name len, name, u32 ndim, u32 dims..., f64 data)
// Tensors are the model parameters plus "adam.m.<name>" / "adam.v.<name>".
struct NamedTensor {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::vector<double> data;
};

struct CheckpointState {
    std::string config_text;  // canonical flat config snapshot
    std::uint64_t epoch_completed = 0;
    std::uint64_t global_step = 0;
    std::uint64_t adam_step = 0;
    std::uint64_t seed = 0;
    std::vector<NamedTensor> tensors;
};

std::vector<std::uint8_t> save_checkpoint(const CheckpointState& state);
CheckpointState load_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint_file(const std::string& path, const CheckpointState& state);
CheckpointState read_checkpoint_file(const std::string& path);

// Snapshot model + optimizer into a state / restore them from one. Restore
// throws CorruptCheckpoint when a tensor is missing or shaped wrong.
CheckpointState snapshot(MoeModel& model, AdamW& opt, const std::string& config_text,
                         std::uint64_t epoch_completed, std::uint64_t global_step,
                         std::uint64_t seed);
void restore(const CheckpointState& state, MoeModel& model, AdamW& opt);

}  // namespace moeeco
