#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kernelcount/nn/layers.hpp"

namespace kc::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moments for one weight tensor. step counts completed updates.
template <typename T>
struct AdamState {
  std::uint64_t step = 0;
  std::vector<T> first_moment;
  std::vector<T> second_moment;
};

/// One bias-corrected Adam update in place. Moments are created (zeroed) on
/// first use. Throws on a non-finite gradient before touching anything.
template <typename T>
void adam_step(std::span<T> weights, std::span<const T> grads, AdamState<T>& state, double lr,
               const AdamConfig& config = {});

/// Adam over a fixed parameter list.
template <typename T>
class Adam {
 public:
  explicit Adam(std::vector<Param<T>*> params, AdamConfig config = {});

  void step(double lr);
  std::uint64_t steps() const { return states_.empty() ? 0 : states_.front().step; }

 private:
  std::vector<Param<T>*> params_;
  std::vector<AdamState<T>> states_;
  AdamConfig config_;
};

}  // namespace kc::nn
