#include "kernelcount/data/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kernelcount/util/random.hpp"

namespace kc {

namespace {

PatchSample flip(const PatchSample& sample, bool horizontal) {
  const Patch& p = sample.patch;
  if (p.rank() != 3) throw std::invalid_argument("flip expects an H x W x C patch");
  const std::size_t h = p.dim(0), w = p.dim(1), c = p.dim(2);
  PatchSample out = sample;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t sy = horizontal ? y : h - 1 - y;
      const std::size_t sx = horizontal ? w - 1 - x : x;
      for (std::size_t ch = 0; ch < c; ++ch) out.patch[(y * w + x) * c + ch] = p[(sy * w + sx) * c + ch];
    }
  }
  if (out.center) {
    if (horizontal) {
      out.center->x = static_cast<double>(w) - out.center->x;
    } else {
      out.center->y = static_cast<double>(h) - out.center->y;
    }
  }
  return out;
}

}  // namespace

PatchSample flip_horizontal(const PatchSample& sample) { return flip(sample, true); }
PatchSample flip_vertical(const PatchSample& sample) { return flip(sample, false); }

PatchSample color_jitter(const PatchSample& sample, const std::array<float, 3>& factors) {
  PatchSample out = sample;
  const std::size_t c = out.patch.dim(out.patch.rank() - 1);
  if (c != 3) throw std::invalid_argument("color jitter expects 3 channels");
  for (std::size_t i = 0; i < out.patch.size(); ++i) {
    out.patch[i] = std::clamp(out.patch[i] * factors[i % 3], 0.0f, 1.0f);
  }
  return out;
}

PatchSample augment(const PatchSample& sample, const AugmentOps& ops, std::uint64_t seed) {
  PatchSample out = sample;
  if (ops.flip_h) out = flip_horizontal(out);
  if (ops.flip_v) out = flip_vertical(out);
  if (ops.color_jitter) {
    Rng rng(seed);
    std::array<float, 3> f{};
    for (auto& v : f) v = static_cast<float>(rng.uniform(kJitterLow, kJitterHigh));
    out = color_jitter(out, f);
  }
  return out;
}

std::size_t augmented_copies(std::size_t n, double fraction) {
  if (fraction < 0.0 || fraction > 1.0) throw std::invalid_argument("augmentation fraction must be in [0, 1]");
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
}

std::vector<PatchSample> augment_training_set(const std::vector<PatchSample>& samples, double fraction,
                                              std::uint64_t seed) {
  const std::size_t copies = augmented_copies(samples.size(), fraction);
  Rng rng(seed);
  auto order = permutation(samples.size(), rng);
  order.resize(copies);
  std::sort(order.begin(), order.end());
  std::vector<PatchSample> out = samples;
  out.reserve(samples.size() + copies);
  for (std::size_t i : order) {
    AugmentOps ops;
    ops.flip_h = rng.coin(0.5);
    ops.flip_v = rng.coin(0.5);
    ops.color_jitter = true;
    out.push_back(augment(samples[i], ops, rng.fork()));
  }
  return out;
}

}  // namespace kc
