#pragma once

#include "kernelcount/nn/tensor.hpp"

namespace kc::nn {

template <typename T>
struct LossValue {
  double value = 0.0;
  Tensor<T> gradient;  // dLoss/dPrediction, same shape as the predictions
};

/// Probability clamp used by the log loss.
inline constexpr double kBceEpsilon = 1e-7;

/// Mean binary cross-entropy. Targets must be exactly 0 or 1. Probabilities are
/// clamped to [eps, 1 - eps] and the gradient is evaluated at the clamped value.
template <typename T>
LossValue<T> bce_loss(const Tensor<T>& predictions, const Tensor<T>& targets);

/// Mean smooth-L1 (Huber with unit threshold) over all elements.
template <typename T>
LossValue<T> smooth_l1_loss(const Tensor<T>& predictions, const Tensor<T>& targets);

}  // namespace kc::nn
