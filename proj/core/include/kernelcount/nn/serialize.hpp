#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "kernelcount/nn/network.hpp"

namespace kc::nn {

/// Weight file layout (all integers little-endian):
///   "KCW1" | version u32 | entry count u32 |
///   per entry: name length u16, UTF-8 name, rank u8, dims u32 x rank, f32 values.
inline constexpr std::uint32_t kWeightFormatVersion = 1;

std::vector<std::uint8_t> encode_weights(const Network<float>& net);
/// Replaces every tensor of `net` from `bytes`. Names, order, and shapes must
/// match exactly; on any error `net` is left untouched.
void decode_weights(std::span<const std::uint8_t> bytes, Network<float>& net);

void save_weights(const Network<float>& net, const std::filesystem::path& path);
void load_weights(const std::filesystem::path& path, Network<float>& net);

}  // namespace kc::nn
