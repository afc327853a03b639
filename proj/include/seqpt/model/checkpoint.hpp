#pragma once

#include <string>

#include "json.hpp"
#include "seqpt/model/trainer.hpp"

namespace seqpt::model {

/// Binary checkpoint layout (all integers and floats little-endian):
///   "SEQPTCKP" | u32 version | u32 scalar bytes | u64 n + JSON header
///   | u64 tensor count | per tensor: u32 n + name, u32 rank, u64 dims..., data
/// The header carries the model config, optimizer config and step counters,
/// the generator state and caller-supplied metadata. Tensors are the
/// parameters in declaration order followed by both Adam moments.
template <typename T>
void save_checkpoint(const std::string& path, const Trainer<T>& trainer,
                     const nlohmann::json& metadata = nlohmann::json::object());

/// Restores parameters, optimizer state and generator state exactly.
template <typename T>
Trainer<T> load_checkpoint(const std::string& path, nlohmann::json* metadata = nullptr);

}  // namespace seqpt::model
