#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "kernelcount/nn/layers.hpp"

namespace kc {
class Rng;
}

namespace kc::nn {

/// Ordered stack of layers with a fixed per-sample input shape.
template <typename T>
class Network {
 public:
  explicit Network(Shape input_shape) : input_shape_(std::move(input_shape)) {}

  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  /// Appends a layer after checking it accepts the current output shape.
  void add(std::unique_ptr<Layer<T>> layer);

  const Shape& input_shape() const { return input_shape_; }
  Shape output_shape() const;
  /// Per-sample output shape after every layer, in order.
  std::vector<Shape> layer_output_shapes() const;

  std::size_t size() const { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_.at(i); }
  const Layer<T>& layer(std::size_t i) const { return *layers_.at(i); }

  /// Training-path forward; caches activations for backward().
  Tensor<T> forward(const Tensor<T>& batch, Mode mode);
  /// Inference over the whole stack. Const and cache-free.
  Tensor<T> infer(const Tensor<T>& batch) const;
  /// Inference through layers [begin, end) only; input must match layer `begin`.
  Tensor<T> infer_range(const Tensor<T>& batch, std::size_t begin, std::size_t end) const;
  /// Back-propagates dLoss/dOutput, accumulating into every parameter gradient.
  void backward(const Tensor<T>& grad_output);
  /// Like backward() but also returns dLoss/dInput.
  Tensor<T> backward_to_input(const Tensor<T>& grad_output);

  void zero_grad();
  void clear_cache();

  std::vector<Param<T>*> params();
  /// Every persisted tensor (parameters then buffers, layer by layer).
  std::vector<NamedTensor<T>> named_tensors();
  std::vector<std::pair<std::string, const Tensor<T>*>> named_tensors() const;

 private:
  Tensor<T> run_backward(const Tensor<T>& grad_output, bool want_input);

  Shape input_shape_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  bool forward_cached_ = false;
};

/// Builds a network layer by layer, tracking shapes, naming layers, and
/// initializing weights (Xavier-uniform weights, zero biases).
template <typename T>
class NetworkBuilder {
 public:
  NetworkBuilder(Shape input_shape, std::uint64_t seed);
  ~NetworkBuilder();

  NetworkBuilder& conv(std::size_t filters, std::size_t kernel, std::size_t stride = 1);
  NetworkBuilder& avg_pool(std::size_t size, std::size_t stride);
  NetworkBuilder& max_pool(std::size_t size, std::size_t stride);
  NetworkBuilder& batchnorm();
  NetworkBuilder& dense(std::size_t outputs);
  NetworkBuilder& relu();
  NetworkBuilder& sigmoid();

  Network<T> build() &&;

 private:
  std::string next_name(std::string_view stem, std::size_t& counter);

  Network<T> net_;
  std::unique_ptr<Rng> rng_;
  std::size_t n_conv_ = 0, n_pool_ = 0, n_bn_ = 0, n_fc_ = 0, n_act_ = 0;
};

extern template class Network<float>;
extern template class Network<double>;
extern template class NetworkBuilder<float>;
extern template class NetworkBuilder<double>;

}  // namespace kc::nn
