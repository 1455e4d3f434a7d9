#pragma once

#include "sketchret/embedder.hpp"

#include "json.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sketchret {

// Checkpoint layout: "SKCK", u32 version, u32-length-prefixed JSON header
// {"config": ModelConfig, "meta": ..., "tensors": [{"name", "rows", "cols"}]},
// then every tensor as row-major little-endian float32 in header order.
std::vector<std::uint8_t> encode_checkpoint(const Model& model, const nlohmann::json& meta = nlohmann::json::object());

/// Throws FormatError on a bad magic/version or a tensor list that does not match the config.
Model decode_checkpoint(std::span<const std::uint8_t> bytes, nlohmann::json* meta = nullptr);

void save_checkpoint(const Model& model, const std::string& path, const nlohmann::json& meta = nlohmann::json::object());
Model load_checkpoint(const std::string& path, nlohmann::json* meta = nullptr);

}  // namespace sketchret
