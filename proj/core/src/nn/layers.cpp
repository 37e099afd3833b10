#include "kernelcount/nn/layers.hpp"

#include <Eigen/Core>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace kc::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

[[noreturn]] void shape_error(const std::string& layer, const std::string& what) {
  throw std::invalid_argument(layer + ": " + what);
}

Shape sample_shape(const Shape& batch) { return Shape(batch.begin() + 1, batch.end()); }

template <typename T>
void require_batch(const Layer<T>& layer, const Tensor<T>& t, std::size_t rank) {
  if (t.rank() != rank) {
    shape_error(layer.name(), "expected rank-" + std::to_string(rank) + " batch, got " + shape_string(t.shape()));
  }
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::avgpool: return "avgpool";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::dense: return "dense";
    case LayerKind::relu: return "relu";
    case LayerKind::sigmoid: return "sigmoid";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Conv2d

template <typename T>
Conv2d<T>::Conv2d(std::string name, std::size_t in_channels, std::size_t filters, std::size_t kernel,
                  std::size_t stride)
    : Layer<T>(std::move(name)), in_channels_(in_channels), filters_(filters), kernel_(kernel), stride_(stride) {
  if (in_channels == 0 || filters == 0 || kernel == 0 || stride == 0) {
    shape_error(this->name(), "conv parameters must be positive");
  }
  const Shape w{kernel, kernel, in_channels, filters};
  weight_ = {this->name() + ".weight", Tensor<T>(w), Tensor<T>(w)};
  bias_ = {this->name() + ".bias", Tensor<T>({filters}), Tensor<T>({filters})};
}

template <typename T>
Shape Conv2d<T>::output_shape(const Shape& in) const {
  if (in.size() != 3) shape_error(this->name(), "expected H x W x C input, got " + shape_string(in));
  if (in[2] != in_channels_) {
    shape_error(this->name(), "channel mismatch: input has " + std::to_string(in[2]) + ", filters expect " +
                                  std::to_string(in_channels_));
  }
  if (in[0] < kernel_ || in[1] < kernel_) {
    shape_error(this->name(), "input " + shape_string(in) + " smaller than " + std::to_string(kernel_) + "x" +
                                  std::to_string(kernel_) + " filter");
  }
  return {(in[0] - kernel_) / stride_ + 1, (in[1] - kernel_) / stride_ + 1, filters_};
}

template <typename T>
std::size_t Conv2d<T>::chunk_samples(const Shape& in) const {
  constexpr std::size_t kChunkValues = std::size_t{1} << 18;
  const Shape out = output_shape(sample_shape(in));
  const std::size_t per_sample = out[0] * out[1] * kernel_ * kernel_ * in_channels_;
  return std::max<std::size_t>(1, kChunkValues / per_sample);
}

template <typename T>
void Conv2d<T>::im2col(const Tensor<T>& input, std::size_t begin, std::size_t end, AlignedVector<T>& cols) const {
  const std::size_t h = input.dim(1), w = input.dim(2), c = in_channels_;
  const std::size_t oh = (h - kernel_) / stride_ + 1, ow = (w - kernel_) / stride_ + 1;
  const std::size_t patch_row = kernel_ * c;
  cols.resize((end - begin) * oh * ow * kernel_ * patch_row);
  const T* src = input.data();
  T* dst = cols.data();
  for (std::size_t b = begin; b < end; ++b) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        for (std::size_t ky = 0; ky < kernel_; ++ky) {
          const T* row = src + ((b * h + oy * stride_ + ky) * w + ox * stride_) * c;
          std::memcpy(dst, row, patch_row * sizeof(T));
          dst += patch_row;
        }
      }
    }
  }
}

template <typename T>
Tensor<T> Conv2d<T>::infer(const Tensor<T>& input) const {
  require_batch(*this, input, 4);
  const Shape out_sample = output_shape(sample_shape(input.shape()));
  const std::size_t n = input.dim(0), per_sample = out_sample[0] * out_sample[1];
  const auto kw = static_cast<Eigen::Index>(kernel_ * kernel_ * in_channels_);
  const auto f = static_cast<Eigen::Index>(filters_);
  const std::size_t chunk = chunk_samples(input.shape());

  Tensor<T> out({n, out_sample[0], out_sample[1], filters_});
  Eigen::Map<const RowMat<T>> wm(weight_.value.data(), kw, f);
  Eigen::Map<const RowVec<T>> bias(bias_.value.data(), f);
  AlignedVector<T> cols;
  for (std::size_t b0 = 0; b0 < n; b0 += chunk) {
    const std::size_t b1 = std::min(n, b0 + chunk);
    const auto rows = static_cast<Eigen::Index>((b1 - b0) * per_sample);
    im2col(input, b0, b1, cols);
    Eigen::Map<const RowMat<T>> a(cols.data(), rows, kw);
    Eigen::Map<RowMat<T>> o(out.data() + b0 * per_sample * filters_, rows, f);
    o.noalias() = a * wm;
    o.rowwise() += bias;
  }
  return out;
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& input, Mode) {
  Tensor<T> out = infer(input);
  input_ = input;
  return out;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad_output, bool need_input_grad) {
  if (input_.empty()) shape_error(this->name(), "backward called without a cached forward pass");
  const Shape& in = input_.shape();
  const Shape out_sample = output_shape(sample_shape(in));
  const std::size_t n = in[0], h = in[1], w = in[2], c = in_channels_;
  const std::size_t oh = out_sample[0], ow = out_sample[1], per_sample = oh * ow;
  if (grad_output.shape() != Shape{n, oh, ow, filters_}) {
    shape_error(this->name(), "gradient shape " + shape_string(grad_output.shape()) + " does not match output");
  }
  const std::size_t patch_row = kernel_ * c;
  const auto kw = static_cast<Eigen::Index>(kernel_ * patch_row);
  const auto f = static_cast<Eigen::Index>(filters_);
  const std::size_t chunk = chunk_samples(in);

  Eigen::Map<RowMat<T>> dw(weight_.grad.data(), kw, f);
  Eigen::Map<RowVec<T>> db(bias_.grad.data(), f);
  Eigen::Map<const RowMat<T>> wm(weight_.value.data(), kw, f);
  Tensor<T> grad_input;
  if (need_input_grad) grad_input = Tensor<T>(in);
  AlignedVector<T> cols;
  RowMat<T> dcols;
  for (std::size_t b0 = 0; b0 < n; b0 += chunk) {
    const std::size_t b1 = std::min(n, b0 + chunk);
    const auto rows = static_cast<Eigen::Index>((b1 - b0) * per_sample);
    Eigen::Map<const RowMat<T>> g(grad_output.data() + b0 * per_sample * filters_, rows, f);
    im2col(input_, b0, b1, cols);
    Eigen::Map<const RowMat<T>> a(cols.data(), rows, kw);
    dw.noalias() += a.transpose() * g;
    db += g.colwise().sum();
    if (!need_input_grad) continue;

    dcols.noalias() = g * wm.transpose();
    T* dst = grad_input.data();
    const T* src = dcols.data();
    for (std::size_t b = b0; b < b1; ++b) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          for (std::size_t ky = 0; ky < kernel_; ++ky) {
            T* row = dst + ((b * h + oy * stride_ + ky) * w + ox * stride_) * c;
            for (std::size_t i = 0; i < patch_row; ++i) row[i] += src[i];
            src += patch_row;
          }
        }
      }
    }
  }
  return grad_input;
}

template <typename T>
void Conv2d<T>::clear_cache() {
  input_ = Tensor<T>();
}

// ---------------------------------------------------------------------------
// Pool2d

template <typename T>
Pool2d<T>::Pool2d(std::string name, PoolKind pool, std::size_t size, std::size_t stride)
    : Layer<T>(std::move(name)), pool_(pool), size_(size), stride_(stride) {
  if (size == 0 || stride == 0) shape_error(this->name(), "pool size and stride must be positive");
}

template <typename T>
Shape Pool2d<T>::output_shape(const Shape& in) const {
  if (in.size() != 3) shape_error(this->name(), "expected H x W x C input, got " + shape_string(in));
  if (in[0] < size_ || in[1] < size_) {
    shape_error(this->name(), "pool window " + std::to_string(size_) + " larger than input " + shape_string(in));
  }
  return {(in[0] - size_) / stride_ + 1, (in[1] - size_) / stride_ + 1, in[2]};
}

template <typename T>
Tensor<T> Pool2d<T>::run(const Tensor<T>& input, std::vector<std::size_t>* argmax) const {
  require_batch(*this, input, 4);
  const Shape out_sample = output_shape(sample_shape(input.shape()));
  const std::size_t n = input.dim(0), h = input.dim(1), w = input.dim(2), c = input.dim(3);
  const std::size_t oh = out_sample[0], ow = out_sample[1];
  Tensor<T> out({n, oh, ow, c});
  if (argmax) argmax->assign(out.size(), 0);
  const T inv_area = T(1) / static_cast<T>(size_ * size_);
  const T* src = input.data();
  T* dst = out.data();
  std::vector<T> acc(c);
  std::vector<std::size_t> best(c);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t out_base = ((b * oh + oy) * ow + ox) * c;
        if (pool_ == PoolKind::average) {
          std::fill(acc.begin(), acc.end(), T(0));
          for (std::size_t ky = 0; ky < size_; ++ky) {
            for (std::size_t kx = 0; kx < size_; ++kx) {
              const T* px = src + ((b * h + oy * stride_ + ky) * w + ox * stride_ + kx) * c;
              for (std::size_t ch = 0; ch < c; ++ch) acc[ch] += px[ch];
            }
          }
          for (std::size_t ch = 0; ch < c; ++ch) dst[out_base + ch] = acc[ch] * inv_area;
        } else {
          std::fill(acc.begin(), acc.end(), -std::numeric_limits<T>::infinity());
          for (std::size_t ky = 0; ky < size_; ++ky) {
            for (std::size_t kx = 0; kx < size_; ++kx) {
              const std::size_t base = ((b * h + oy * stride_ + ky) * w + ox * stride_ + kx) * c;
              for (std::size_t ch = 0; ch < c; ++ch) {
                if (src[base + ch] > acc[ch]) {
                  acc[ch] = src[base + ch];
                  best[ch] = base + ch;
                }
              }
            }
          }
          for (std::size_t ch = 0; ch < c; ++ch) {
            dst[out_base + ch] = acc[ch];
            if (argmax) (*argmax)[out_base + ch] = best[ch];
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> Pool2d<T>::forward(const Tensor<T>& input, Mode) {
  input_shape_ = input.shape();
  cached_ = true;
  return run(input, pool_ == PoolKind::max ? &argmax_ : nullptr);
}

template <typename T>
Tensor<T> Pool2d<T>::infer(const Tensor<T>& input) const {
  return run(input, nullptr);
}

template <typename T>
Tensor<T> Pool2d<T>::backward(const Tensor<T>& grad_output, bool need_input_grad) {
  if (!cached_) shape_error(this->name(), "backward called without a cached forward pass");
  if (!need_input_grad) return {};
  const std::size_t n = input_shape_[0], h = input_shape_[1], w = input_shape_[2], c = input_shape_[3];
  const std::size_t oh = (h - size_) / stride_ + 1, ow = (w - size_) / stride_ + 1;
  if (grad_output.shape() != Shape{n, oh, ow, c}) {
    shape_error(this->name(), "gradient shape " + shape_string(grad_output.shape()) + " does not match output");
  }
  Tensor<T> grad_input(input_shape_);
  T* dst = grad_input.data();
  const T* g = grad_output.data();
  if (pool_ == PoolKind::max) {
    for (std::size_t i = 0; i < grad_output.size(); ++i) dst[argmax_[i]] += g[i];
    return grad_input;
  }
  const T inv_area = T(1) / static_cast<T>(size_ * size_);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const T* go = g + ((b * oh + oy) * ow + ox) * c;
        for (std::size_t ky = 0; ky < size_; ++ky) {
          for (std::size_t kx = 0; kx < size_; ++kx) {
            T* px = dst + ((b * h + oy * stride_ + ky) * w + ox * stride_ + kx) * c;
            for (std::size_t ch = 0; ch < c; ++ch) px[ch] += go[ch] * inv_area;
          }
        }
      }
    }
  }
  return grad_input;
}

template <typename T>
void Pool2d<T>::clear_cache() {
  argmax_.clear();
  input_shape_.clear();
  cached_ = false;
}

// ---------------------------------------------------------------------------
// BatchNorm

template <typename T>
BatchNorm<T>::BatchNorm(std::string name, std::size_t channels, T momentum, T epsilon)
    : Layer<T>(std::move(name)),
      channels_(channels),
      momentum_(momentum),
      epsilon_(epsilon),
      running_mean_({channels}, T(0)),
      running_var_({channels}, T(1)),
      tracked_({1}, T(0)) {
  if (channels == 0) shape_error(this->name(), "batchnorm needs at least one channel");
  gamma_ = {this->name() + ".gamma", Tensor<T>({channels}, T(1)), Tensor<T>({channels})};
  beta_ = {this->name() + ".beta", Tensor<T>({channels}), Tensor<T>({channels})};
}

template <typename T>
std::vector<NamedTensor<T>> BatchNorm<T>::buffers() {
  return {{this->name() + ".running_mean", &running_mean_},
          {this->name() + ".running_var", &running_var_},
          {this->name() + ".tracked", &tracked_}};
}

template <typename T>
Shape BatchNorm<T>::output_shape(const Shape& in) const {
  if (in.empty() || in.back() != channels_) {
    shape_error(this->name(), "expected " + std::to_string(channels_) + " channels in the last axis, got " +
                                  shape_string(in));
  }
  return in;
}

template <typename T>
Tensor<T> BatchNorm<T>::infer(const Tensor<T>& input) const {
  if (input.rank() < 2) shape_error(this->name(), "expected a batch");
  output_shape(sample_shape(input.shape()));
  if (!has_statistics()) shape_error(this->name(), "inference requested before any training statistics exist");
  std::vector<T> scale(channels_), shift(channels_);
  for (std::size_t ch = 0; ch < channels_; ++ch) {
    scale[ch] = gamma_.value[ch] / std::sqrt(running_var_[ch] + epsilon_);
    shift[ch] = beta_.value[ch] - running_mean_[ch] * scale[ch];
  }
  Tensor<T> out(input.shape());
  const std::size_t rows = input.size() / channels_;
  const T* src = input.data();
  T* dst = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t ch = 0; ch < channels_; ++ch) dst[r * channels_ + ch] = src[r * channels_ + ch] * scale[ch] + shift[ch];
  }
  return out;
}

template <typename T>
Tensor<T> BatchNorm<T>::forward(const Tensor<T>& input, Mode mode) {
  if (input.rank() < 2) shape_error(this->name(), "expected a batch");
  output_shape(sample_shape(input.shape()));
  const std::size_t c = channels_;
  const std::size_t rows = input.size() / c;
  const T* src = input.data();
  std::vector<T> mean(c), var(c);
  cached_mode_ = mode;
  inv_std_.assign(c, T(0));

  if (mode == Mode::infer) {
    if (!has_statistics()) shape_error(this->name(), "inference requested before any training statistics exist");
    for (std::size_t ch = 0; ch < c; ++ch) {
      mean[ch] = running_mean_[ch];
      var[ch] = running_var_[ch];
    }
  } else {
    if (rows < 2) shape_error(this->name(), "training-mode batch norm needs at least two values per channel");
    std::vector<double> sum(c, 0.0), sq(c, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t ch = 0; ch < c; ++ch) sum[ch] += static_cast<double>(src[r * c + ch]);
    }
    for (std::size_t ch = 0; ch < c; ++ch) mean[ch] = static_cast<T>(sum[ch] / static_cast<double>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double d = static_cast<double>(src[r * c + ch]) - static_cast<double>(mean[ch]);
        sq[ch] += d * d;
      }
    }
    const double unbias = static_cast<double>(rows) / static_cast<double>(rows - 1);
    for (std::size_t ch = 0; ch < c; ++ch) {
      var[ch] = static_cast<T>(sq[ch] / static_cast<double>(rows));
      running_mean_[ch] = momentum_ * running_mean_[ch] + (T(1) - momentum_) * mean[ch];
      running_var_[ch] = momentum_ * running_var_[ch] + (T(1) - momentum_) * static_cast<T>(var[ch] * unbias);
    }
    tracked_[0] += T(1);
  }

  for (std::size_t ch = 0; ch < c; ++ch) inv_std_[ch] = T(1) / std::sqrt(var[ch] + epsilon_);
  xhat_ = Tensor<T>(input.shape());
  Tensor<T> out(input.shape());
  T* xh = xhat_.data();
  T* dst = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t i = r * c + ch;
      xh[i] = (src[i] - mean[ch]) * inv_std_[ch];
      dst[i] = gamma_.value[ch] * xh[i] + beta_.value[ch];
    }
  }
  return out;
}

template <typename T>
Tensor<T> BatchNorm<T>::backward(const Tensor<T>& grad_output, bool need_input_grad) {
  if (xhat_.empty()) shape_error(this->name(), "backward called without a cached forward pass");
  if (grad_output.shape() != xhat_.shape()) shape_error(this->name(), "gradient shape mismatch");
  const std::size_t c = channels_;
  const std::size_t rows = grad_output.size() / c;
  const T* g = grad_output.data();
  const T* xh = xhat_.data();
  std::vector<T> sum_g(c, T(0)), sum_gx(c, T(0));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      sum_g[ch] += g[r * c + ch];
      sum_gx[ch] += g[r * c + ch] * xh[r * c + ch];
    }
  }
  for (std::size_t ch = 0; ch < c; ++ch) {
    gamma_.grad[ch] += sum_gx[ch];
    beta_.grad[ch] += sum_g[ch];
  }
  if (!need_input_grad) return {};

  Tensor<T> grad_input(grad_output.shape());
  T* dst = grad_input.data();
  if (cached_mode_ == Mode::infer) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t ch = 0; ch < c; ++ch) dst[r * c + ch] = g[r * c + ch] * gamma_.value[ch] * inv_std_[ch];
    }
    return grad_input;
  }
  const T m = static_cast<T>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t i = r * c + ch;
      dst[i] = gamma_.value[ch] * inv_std_[ch] / m * (m * g[i] - sum_g[ch] - xh[i] * sum_gx[ch]);
    }
  }
  return grad_input;
}

template <typename T>
void BatchNorm<T>::clear_cache() {
  xhat_ = Tensor<T>();
  inv_std_.clear();
}

// ---------------------------------------------------------------------------
// Dense

template <typename T>
Dense<T>::Dense(std::string name, std::size_t inputs, std::size_t outputs)
    : Layer<T>(std::move(name)), inputs_(inputs), outputs_(outputs) {
  if (inputs == 0 || outputs == 0) shape_error(this->name(), "dense dimensions must be positive");
  weight_ = {this->name() + ".weight", Tensor<T>({inputs, outputs}), Tensor<T>({inputs, outputs})};
  bias_ = {this->name() + ".bias", Tensor<T>({outputs}), Tensor<T>({outputs})};
}

template <typename T>
Shape Dense<T>::output_shape(const Shape& in) const {
  if (shape_size(in) != inputs_) {
    shape_error(this->name(), "input " + shape_string(in) + " has " + std::to_string(shape_size(in)) +
                                  " values, expected " + std::to_string(inputs_));
  }
  return {outputs_};
}

template <typename T>
Tensor<T> Dense<T>::infer(const Tensor<T>& input) const {
  if (input.rank() < 2) shape_error(this->name(), "expected a batch");
  output_shape(sample_shape(input.shape()));
  const auto n = static_cast<Eigen::Index>(input.dim(0));
  Tensor<T> out({input.dim(0), outputs_});
  Eigen::Map<const RowMat<T>> x(input.data(), n, static_cast<Eigen::Index>(inputs_));
  Eigen::Map<const RowMat<T>> w(weight_.value.data(), static_cast<Eigen::Index>(inputs_),
                                static_cast<Eigen::Index>(outputs_));
  Eigen::Map<const RowVec<T>> b(bias_.value.data(), static_cast<Eigen::Index>(outputs_));
  Eigen::Map<RowMat<T>> y(out.data(), n, static_cast<Eigen::Index>(outputs_));
  y.noalias() = x * w;
  y.rowwise() += b;
  return out;
}

template <typename T>
Tensor<T> Dense<T>::forward(const Tensor<T>& input, Mode) {
  Tensor<T> out = infer(input);
  input_ = input;
  return out;
}

template <typename T>
Tensor<T> Dense<T>::backward(const Tensor<T>& grad_output, bool need_input_grad) {
  if (input_.empty()) shape_error(this->name(), "backward called without a cached forward pass");
  const auto n = static_cast<Eigen::Index>(input_.dim(0));
  const auto in = static_cast<Eigen::Index>(inputs_);
  const auto out = static_cast<Eigen::Index>(outputs_);
  if (grad_output.shape() != Shape{input_.dim(0), outputs_}) shape_error(this->name(), "gradient shape mismatch");
  Eigen::Map<const RowMat<T>> x(input_.data(), n, in);
  Eigen::Map<const RowMat<T>> g(grad_output.data(), n, out);
  Eigen::Map<RowMat<T>> dw(weight_.grad.data(), in, out);
  Eigen::Map<RowVec<T>> db(bias_.grad.data(), out);
  dw.noalias() += x.transpose() * g;
  db += g.colwise().sum();
  if (!need_input_grad) return {};
  Tensor<T> grad_input(input_.shape());
  Eigen::Map<const RowMat<T>> w(weight_.value.data(), in, out);
  Eigen::Map<RowMat<T>> dx(grad_input.data(), n, in);
  dx.noalias() = g * w.transpose();
  return grad_input;
}

// ---------------------------------------------------------------------------
// Activations

template <typename T>
Tensor<T> Relu<T>::infer(const Tensor<T>& input) const {
  Tensor<T> out(input.shape());
  const T* src = input.data();
  T* dst = out.data();
  for (std::size_t i = 0; i < input.size(); ++i) dst[i] = src[i] > T(0) ? src[i] : T(0);
  return out;
}

template <typename T>
Tensor<T> Relu<T>::forward(const Tensor<T>& input, Mode) {
  output_ = infer(input);
  return output_;
}

template <typename T>
Tensor<T> Relu<T>::backward(const Tensor<T>& grad_output, bool need_input_grad) {
  if (output_.empty()) shape_error(this->name(), "backward called without a cached forward pass");
  if (!need_input_grad) return {};
  if (grad_output.shape() != output_.shape()) shape_error(this->name(), "gradient shape mismatch");
  Tensor<T> grad_input(grad_output.shape());
  for (std::size_t i = 0; i < grad_output.size(); ++i) grad_input[i] = output_[i] > T(0) ? grad_output[i] : T(0);
  return grad_input;
}

template <typename T>
Tensor<T> Sigmoid<T>::infer(const Tensor<T>& input) const {
  const T hi = std::nextafter(T(1), T(0));
  const T lo = T(1) - hi;
  Tensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    const T x = input[i];
    T p;
    if (x >= T(0)) {
      p = T(1) / (T(1) + std::exp(-x));
    } else {
      const T e = std::exp(x);
      p = e / (T(1) + e);
    }
    out[i] = std::clamp(p, lo, hi);
  }
  return out;
}

template <typename T>
Tensor<T> Sigmoid<T>::forward(const Tensor<T>& input, Mode) {
  output_ = infer(input);
  return output_;
}

template <typename T>
Tensor<T> Sigmoid<T>::backward(const Tensor<T>& grad_output, bool need_input_grad) {
  if (output_.empty()) shape_error(this->name(), "backward called without a cached forward pass");
  if (!need_input_grad) return {};
  if (grad_output.shape() != output_.shape()) shape_error(this->name(), "gradient shape mismatch");
  Tensor<T> grad_input(grad_output.shape());
  for (std::size_t i = 0; i < grad_output.size(); ++i) {
    const T p = output_[i];
    grad_input[i] = grad_output[i] * p * (T(1) - p);
  }
  return grad_input;
}

// ---------------------------------------------------------------------------
// Free functions

namespace {

template <typename T>
Tensor<T> as_batch(const Tensor<T>& input, std::size_t sample_rank, bool& added) {
  added = input.rank() == sample_rank;
  if (!added) return input;
  Shape shape{1};
  shape.insert(shape.end(), input.shape().begin(), input.shape().end());
  return input.reshaped(shape);
}

template <typename T>
Tensor<T> drop_batch(Tensor<T> t, bool added) {
  if (added) t.reshape(sample_shape(t.shape()));
  return t;
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& filters, const Tensor<T>& bias,
                         std::size_t stride) {
  if (filters.rank() != 4 || filters.dim(0) != filters.dim(1)) {
    throw std::invalid_argument("conv2d_forward: filters must be k x k x Cin x Cout, got " +
                                shape_string(filters.shape()));
  }
  if (bias.shape() != Shape{filters.dim(3)}) throw std::invalid_argument("conv2d_forward: bias size mismatch");
  Conv2d<T> conv("conv", filters.dim(2), filters.dim(3), filters.dim(0), stride);
  conv.weight().value = filters;
  conv.bias().value = bias;
  bool added = false;
  return drop_batch(conv.infer(as_batch(input, 3, added)), added);
}

template <typename T>
Tensor<T> pool2d_forward(const Tensor<T>& input, PoolKind kind, std::size_t size, std::size_t stride) {
  Pool2d<T> pool("pool", kind, size, stride);
  bool added = false;
  return drop_batch(pool.infer(as_batch(input, 3, added)), added);
}

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
  if (weights.rank() != 2) throw std::invalid_argument("dense_forward: weights must be In x Out");
  if (bias.shape() != Shape{weights.dim(1)}) throw std::invalid_argument("dense_forward: bias size mismatch");
  Dense<T> dense("dense", weights.dim(0), weights.dim(1));
  dense.weight().value = weights;
  dense.bias().value = bias;
  if (input.rank() == 1) {
    return dense.infer(input.reshaped({1, input.size()})).reshaped({weights.dim(1)});
  }
  return dense.infer(input);
}

#define KC_INSTANTIATE_LAYERS(T)                                                                      \
  template class Conv2d<T>;                                                                           \
  template class Pool2d<T>;                                                                           \
  template class BatchNorm<T>;                                                                        \
  template class Dense<T>;                                                                            \
  template class Relu<T>;                                                                             \
  template class Sigmoid<T>;                                                                          \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t); \
  template Tensor<T> pool2d_forward(const Tensor<T>&, PoolKind, std::size_t, std::size_t);            \
  template Tensor<T> dense_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);

KC_INSTANTIATE_LAYERS(float)
KC_INSTANTIATE_LAYERS(double)

}  // namespace kc::nn
