#include "kernelcount/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kc::nn {

template <typename T>
LossValue<T> bce_loss(const Tensor<T>& predictions, const Tensor<T>& targets) {
  if (predictions.size() != targets.size() || predictions.empty()) {
    throw std::invalid_argument("bce_loss: " + std::to_string(predictions.size()) + " predictions vs " +
                                std::to_string(targets.size()) + " targets");
  }
  LossValue<T> out{0.0, Tensor<T>(predictions.shape())};
  const double n = static_cast<double>(predictions.size());
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double y = static_cast<double>(targets[i]);
    if (y != 0.0 && y != 1.0) throw std::invalid_argument("bce_loss: target " + std::to_string(y) + " not in {0,1}");
    const double p = std::clamp(static_cast<double>(predictions[i]), kBceEpsilon, 1.0 - kBceEpsilon);
    total += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    out.gradient[i] = static_cast<T>((-(y / p) + (1.0 - y) / (1.0 - p)) / n);
  }
  out.value = total / n;
  return out;
}

template <typename T>
LossValue<T> smooth_l1_loss(const Tensor<T>& predictions, const Tensor<T>& targets) {
  if (predictions.shape() != targets.shape() || predictions.empty()) {
    throw std::invalid_argument("smooth_l1_loss: shape " + shape_string(predictions.shape()) + " vs " +
                                shape_string(targets.shape()));
  }
  LossValue<T> out{0.0, Tensor<T>(predictions.shape())};
  const double n = static_cast<double>(predictions.size());
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double x = static_cast<double>(predictions[i]) - static_cast<double>(targets[i]);
    const double ax = std::abs(x);
    total += ax < 1.0 ? 0.5 * x * x : ax - 0.5;
    out.gradient[i] = static_cast<T>(std::clamp(x, -1.0, 1.0) / n);
  }
  out.value = total / n;
  return out;
}

template LossValue<float> bce_loss(const Tensor<float>&, const Tensor<float>&);
template LossValue<double> bce_loss(const Tensor<double>&, const Tensor<double>&);
template LossValue<float> smooth_l1_loss(const Tensor<float>&, const Tensor<float>&);
template LossValue<double> smooth_l1_loss(const Tensor<double>&, const Tensor<double>&);

}  // namespace kc::nn
