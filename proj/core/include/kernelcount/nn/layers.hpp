#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kernelcount/nn/tensor.hpp"

namespace kc::nn {

enum class LayerKind { conv2d, avgpool, maxpool, batchnorm, dense, relu, sigmoid };
enum class Mode { train, infer };

std::string_view to_string(LayerKind kind);

template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
};

template <typename T>
using NamedTensor = std::pair<std::string, Tensor<T>*>;

/// One stage of a feed-forward network.
///
/// forward() caches what backward() needs; infer() is const and keeps no
/// state, so a network can serve concurrent readers while nobody trains it.
/// Spatial tensors are N x H x W x C; dense layers accept any N x ... input
/// and flatten everything past the batch dimension.
template <typename T>
class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  const std::string& name() const { return name_; }

  /// Per-sample output shape for a per-sample input shape; throws on mismatch.
  virtual Shape output_shape(const Shape& input) const = 0;

  virtual Tensor<T> forward(const Tensor<T>& input, Mode mode) = 0;
  virtual Tensor<T> infer(const Tensor<T>& input) const = 0;
  /// Accumulates parameter gradients and returns dLoss/dInput (empty when
  /// need_input_grad is false).
  virtual Tensor<T> backward(const Tensor<T>& grad_output, bool need_input_grad = true) = 0;

  virtual std::vector<Param<T>*> params() { return {}; }
  /// Non-trainable state persisted with the weights.
  virtual std::vector<NamedTensor<T>> buffers() { return {}; }

  virtual std::unique_ptr<Layer> clone() const = 0;
  virtual void clear_cache() = 0;

 private:
  std::string name_;
};

/// Valid (unpadded) 2-D convolution. Filters are stored k x k x Cin x Cout.
template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(std::string name, std::size_t in_channels, std::size_t filters, std::size_t kernel,
         std::size_t stride = 1);

  LayerKind kind() const override { return LayerKind::conv2d; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> forward(const Tensor<T>& input, Mode mode) override;
  Tensor<T> infer(const Tensor<T>& input) const override;
  Tensor<T> backward(const Tensor<T>& grad_output, bool need_input_grad) override;
  std::vector<Param<T>*> params() override { return {&weight_, &bias_}; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv2d>(*this); }
  void clear_cache() override;

  std::size_t in_channels() const { return in_channels_; }
  std::size_t filters() const { return filters_; }
  std::size_t kernel() const { return kernel_; }
  std::size_t stride() const { return stride_; }
  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }

 private:
  /// Samples per im2col chunk for an input of this shape; keeps the column
  /// buffer around a megabyte regardless of batch size.
  std::size_t chunk_samples(const Shape& input) const;
  /// Unrolls samples [begin, end) into rows of kernel x kernel x channels values.
  void im2col(const Tensor<T>& input, std::size_t begin, std::size_t end, AlignedVector<T>& cols) const;

  std::size_t in_channels_, filters_, kernel_, stride_;
  Param<T> weight_, bias_;
  Tensor<T> input_;
};

enum class PoolKind { average, max };

template <typename T>
class Pool2d final : public Layer<T> {
 public:
  Pool2d(std::string name, PoolKind pool, std::size_t size, std::size_t stride);

  LayerKind kind() const override { return pool_ == PoolKind::max ? LayerKind::maxpool : LayerKind::avgpool; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> forward(const Tensor<T>& input, Mode mode) override;
  Tensor<T> infer(const Tensor<T>& input) const override;
  Tensor<T> backward(const Tensor<T>& grad_output, bool need_input_grad) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Pool2d>(*this); }
  void clear_cache() override;

  PoolKind pool() const { return pool_; }
  std::size_t size() const { return size_; }
  std::size_t stride() const { return stride_; }

 private:
  Tensor<T> run(const Tensor<T>& input, std::vector<std::size_t>* argmax) const;

  PoolKind pool_;
  std::size_t size_, stride_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
  bool cached_ = false;
};

/// Per-channel normalization over every axis but the last.
template <typename T>
class BatchNorm final : public Layer<T> {
 public:
  BatchNorm(std::string name, std::size_t channels, T momentum = T(0.9), T epsilon = T(1e-5));

  LayerKind kind() const override { return LayerKind::batchnorm; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> forward(const Tensor<T>& input, Mode mode) override;
  Tensor<T> infer(const Tensor<T>& input) const override;
  Tensor<T> backward(const Tensor<T>& grad_output, bool need_input_grad) override;
  std::vector<Param<T>*> params() override { return {&gamma_, &beta_}; }
  std::vector<NamedTensor<T>> buffers() override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<BatchNorm>(*this); }
  void clear_cache() override;

  std::size_t channels() const { return channels_; }
  bool has_statistics() const { return tracked_[0] > T(0); }
  Param<T>& gamma() { return gamma_; }
  Param<T>& beta() { return beta_; }
  Tensor<T>& running_mean() { return running_mean_; }
  Tensor<T>& running_var() { return running_var_; }
  /// Marks running statistics as present, e.g. after setting them by hand.
  void mark_statistics() { tracked_[0] = std::max(tracked_[0], T(1)); }

 private:
  std::size_t channels_;
  T momentum_, epsilon_;
  Param<T> gamma_, beta_;
  Tensor<T> running_mean_, running_var_, tracked_;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
  Mode cached_mode_ = Mode::infer;
};

/// Affine map y = x W + b with W stored In x Out.
template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(std::string name, std::size_t inputs, std::size_t outputs);

  LayerKind kind() const override { return LayerKind::dense; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> forward(const Tensor<T>& input, Mode mode) override;
  Tensor<T> infer(const Tensor<T>& input) const override;
  Tensor<T> backward(const Tensor<T>& grad_output, bool need_input_grad) override;
  std::vector<Param<T>*> params() override { return {&weight_, &bias_}; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dense>(*this); }
  void clear_cache() override { input_ = Tensor<T>(); }

  std::size_t inputs() const { return inputs_; }
  std::size_t outputs() const { return outputs_; }
  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }

 private:
  std::size_t inputs_, outputs_;
  Param<T> weight_, bias_;
  Tensor<T> input_;
};

template <typename T>
class Relu final : public Layer<T> {
 public:
  using Layer<T>::Layer;
  LayerKind kind() const override { return LayerKind::relu; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor<T> forward(const Tensor<T>& input, Mode mode) override;
  Tensor<T> infer(const Tensor<T>& input) const override;
  Tensor<T> backward(const Tensor<T>& grad_output, bool need_input_grad) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Relu>(*this); }
  void clear_cache() override { output_ = Tensor<T>(); }

 private:
  Tensor<T> output_;
};

/// Logistic output, kept strictly inside (0, 1) at the working precision.
template <typename T>
class Sigmoid final : public Layer<T> {
 public:
  using Layer<T>::Layer;
  LayerKind kind() const override { return LayerKind::sigmoid; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor<T> forward(const Tensor<T>& input, Mode mode) override;
  Tensor<T> infer(const Tensor<T>& input) const override;
  Tensor<T> backward(const Tensor<T>& grad_output, bool need_input_grad) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Sigmoid>(*this); }
  void clear_cache() override { output_ = Tensor<T>(); }

 private:
  Tensor<T> output_;
};

// Free-function forms of the layer math, used by tests and by code that does
// not need a whole network.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& filters, const Tensor<T>& bias,
                         std::size_t stride);
template <typename T>
Tensor<T> pool2d_forward(const Tensor<T>& input, PoolKind kind, std::size_t size, std::size_t stride);
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias);

}  // namespace kc::nn
