#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "premsel/nn/network.hpp"

namespace premsel::nn {

/// PSNN model file, all integers little-endian:
///   "PSNN" | u32 version | u32 layer count |
///   per layer: u8 activation, f32 dropout, u32 rows, u32 cols,
///              f32[rows*cols] weights (row-major), f32[rows] bias |
///   u32 CRC-32 of every preceding byte.
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::byte> serialize_model(const DenseNetwork<float>& net);

/// Throws Error(BadMagic | ChecksumMismatch | VersionMismatch).
DenseNetwork<float> deserialize_model(std::span<const std::byte> bytes);

/// Throws Error(IoFailure) on filesystem errors.
void save_model(const DenseNetwork<float>& net, const std::filesystem::path& path);
DenseNetwork<float> load_model(const std::filesystem::path& path);

}  // namespace premsel::nn
