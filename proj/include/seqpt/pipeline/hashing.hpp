#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

namespace seqpt::pipeline {

/// SHA-1 of "blob <size>\0<content>" in lowercase hex, as `git hash-object`.
std::string git_blob_hash(std::string_view content);
std::string file_hash(const std::string& path);

/// Blob hash of the compact dump (object keys are sorted by nlohmann::json).
std::string config_hash(const nlohmann::json& config);

}  // namespace seqpt::pipeline
