#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "kernelcount/data/dataset.hpp"

namespace kc {

struct AugmentOps {
  bool flip_h = false;
  bool flip_v = false;
  bool color_jitter = false;
};

inline constexpr float kJitterLow = 0.8f;
inline constexpr float kJitterHigh = 1.2f;

PatchSample flip_horizontal(const PatchSample& sample);
PatchSample flip_vertical(const PatchSample& sample);
/// Multiplies each channel by its factor and clamps to [0, 1].
PatchSample color_jitter(const PatchSample& sample, const std::array<float, 3>& factors);

/// Applies the requested ops in order flip-h, flip-v, jitter. Jitter factors
/// are drawn from `seed` in [kJitterLow, kJitterHigh].
PatchSample augment(const PatchSample& sample, const AugmentOps& ops, std::uint64_t seed);

/// Number of augmented copies added for a training set of n samples.
std::size_t augmented_copies(std::size_t n, double fraction);

/// Returns `samples` followed by augmented copies of a uniformly chosen
/// `fraction` of them. Each copy gets flip-h and flip-v with probability 1/2
/// and always gets color jitter.
std::vector<PatchSample> augment_training_set(const std::vector<PatchSample>& samples, double fraction,
                                              std::uint64_t seed);

}  // namespace kc
