#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsa/autodiff/parameters.hpp"

namespace lsa::ad {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// On-disk layout, all integers little-endian:
//   "LSACKPT\0" | u32 version | u64 manifest byte length | manifest (UTF-8 JSON)
//   | f64 payload of every parameter, in manifest order
// The manifest is {"version":1, "parameters":[{"name","shape"}...], "metadata":{...}}.
struct Checkpoint {
  ParameterSet parameters;
  nlohmann::json metadata = nlohmann::json::object();
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lsa::ad
