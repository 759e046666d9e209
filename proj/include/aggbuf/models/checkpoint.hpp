#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aggbuf/models/params.hpp"

namespace aggbuf {

inline constexpr std::uint8_t kCheckpointVersion = 1;

// Binary container: version byte, u64 header length, JSON header, u64
// tensor count, then per tensor u32 name length, name, u64 rows, u64 cols
// and rows*cols float64 values. Little-endian throughout.
struct Container {
  nlohmann::json header;
  std::vector<NamedTensor> tensors;
};

std::vector<std::uint8_t> encode(const Container& c);
Container decode(std::span<const std::uint8_t> bytes);

void write_container(const Container& c, const std::filesystem::path& path);
Container read_container(const std::filesystem::path& path);

std::string sha256_hex(std::span<const std::uint8_t> bytes);

// Hash over tensor names, shapes and values; the frozen flag is not part of
// the content.
std::string content_hash(const std::vector<NamedTensor>& tensors);

void save_model(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace aggbuf
