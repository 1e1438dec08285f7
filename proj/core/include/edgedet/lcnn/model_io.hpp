#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "edgedet/lcnn/network.hpp"

namespace edgedet::lcnn {

inline constexpr std::uint32_t kModelVersion = 1;

/// Binary layout, all integers u32/i32 little-endian:
///   "LCNN", version, layer count,
///   input channels, input size, SSD ratio count, ratios and scalars as f64,
///   per layer: op tag, source, then shape integers and raw f32 weights,
///   CRC32 of everything before it.
std::vector<unsigned char> encode_model(const CnnModel& model);
/// FormatError on bad magic, version, length, checksum or layer shapes.
CnnModel decode_model(std::span<const unsigned char> bytes);

/// Writes the binary model plus a human-readable `<path>.json` sidecar.
void save_model(const CnnModel& model, const std::filesystem::path& path);
CnnModel load_model(const std::filesystem::path& path);
std::filesystem::path sidecar_path(const std::filesystem::path& model_path);

struct Architecture {
  int input_channels = 3;
  int input_size = 224;
  std::vector<LayerSpec> layers;
};

std::string architecture_json(const CnnModel& model);
/// Accepts the sidecar format. Spatial sides are recomputed from the input
/// size; FormatError when the document is malformed or shapes do not chain.
Architecture architecture_from_json(const std::string& text);
Architecture load_architecture(const std::filesystem::path& path);
Architecture architecture_of(const CnnModel& model);

}  // namespace edgedet::lcnn
