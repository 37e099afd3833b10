#include "kernelcount/nn/network.hpp"

#include <algorithm>
#include <stdexcept>

#include "kernelcount/nn/init.hpp"
#include "kernelcount/util/random.hpp"

namespace kc::nn {

template <typename T>
Network<T>::Network(const Network& other) : input_shape_(other.input_shape_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
  for (auto& l : layers_) l->clear_cache();
}

template <typename T>
Network<T>& Network<T>::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

template <typename T>
void Network<T>::add(std::unique_ptr<Layer<T>> layer) {
  layer->output_shape(output_shape());
  layers_.push_back(std::move(layer));
}

template <typename T>
Shape Network<T>::output_shape() const {
  Shape s = input_shape_;
  for (const auto& l : layers_) s = l->output_shape(s);
  return s;
}

template <typename T>
std::vector<Shape> Network<T>::layer_output_shapes() const {
  std::vector<Shape> shapes;
  Shape s = input_shape_;
  for (const auto& l : layers_) {
    s = l->output_shape(s);
    shapes.push_back(s);
  }
  return shapes;
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& batch, Mode mode) {
  if (batch.rank() != input_shape_.size() + 1 ||
      !std::equal(input_shape_.begin(), input_shape_.end(), batch.shape().begin() + 1)) {
    throw std::invalid_argument("network expects batches of " + shape_string(input_shape_) + ", got " +
                                shape_string(batch.shape()));
  }
  Tensor<T> x = batch;
  for (auto& l : layers_) x = l->forward(x, mode);
  forward_cached_ = true;
  return x;
}

template <typename T>
Tensor<T> Network<T>::infer(const Tensor<T>& batch) const {
  if (batch.rank() != input_shape_.size() + 1 ||
      !std::equal(input_shape_.begin(), input_shape_.end(), batch.shape().begin() + 1)) {
    throw std::invalid_argument("network expects batches of " + shape_string(input_shape_) + ", got " +
                                shape_string(batch.shape()));
  }
  return infer_range(batch, 0, layers_.size());
}

template <typename T>
Tensor<T> Network<T>::infer_range(const Tensor<T>& batch, std::size_t begin, std::size_t end) const {
  if (begin > end || end > layers_.size()) throw std::out_of_range("infer_range: bad layer range");
  Tensor<T> x = batch;
  for (std::size_t i = begin; i < end; ++i) x = layers_[i]->infer(x);
  return x;
}

template <typename T>
Tensor<T> Network<T>::run_backward(const Tensor<T>& grad_output, bool want_input) {
  if (!forward_cached_) throw std::logic_error("backward called without a preceding forward pass");
  Tensor<T> g = grad_output;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    g = layers_[i]->backward(g, want_input || i > 0);
  }
  return g;
}

template <typename T>
void Network<T>::backward(const Tensor<T>& grad_output) {
  run_backward(grad_output, false);
}

template <typename T>
Tensor<T> Network<T>::backward_to_input(const Tensor<T>& grad_output) {
  return run_backward(grad_output, true);
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto* p : params()) p->grad.fill(T(0));
}

template <typename T>
void Network<T>::clear_cache() {
  for (auto& l : layers_) l->clear_cache();
  forward_cached_ = false;
}

template <typename T>
std::vector<Param<T>*> Network<T>::params() {
  std::vector<Param<T>*> out;
  for (auto& l : layers_) {
    for (auto* p : l->params()) out.push_back(p);
  }
  return out;
}

template <typename T>
std::vector<NamedTensor<T>> Network<T>::named_tensors() {
  std::vector<NamedTensor<T>> out;
  for (auto& l : layers_) {
    for (auto* p : l->params()) out.emplace_back(p->name, &p->value);
    for (auto& b : l->buffers()) out.push_back(b);
  }
  return out;
}

template <typename T>
std::vector<std::pair<std::string, const Tensor<T>*>> Network<T>::named_tensors() const {
  std::vector<std::pair<std::string, const Tensor<T>*>> out;
  for (auto& [name, t] : const_cast<Network*>(this)->named_tensors()) out.emplace_back(name, t);
  return out;
}

// ---------------------------------------------------------------------------

template <typename T>
NetworkBuilder<T>::NetworkBuilder(Shape input_shape, std::uint64_t seed)
    : net_(std::move(input_shape)), rng_(std::make_unique<Rng>(seed)) {}

template <typename T>
NetworkBuilder<T>::~NetworkBuilder() = default;

template <typename T>
std::string NetworkBuilder<T>::next_name(std::string_view stem, std::size_t& counter) {
  return std::string(stem) + std::to_string(++counter);
}

template <typename T>
NetworkBuilder<T>& NetworkBuilder<T>::conv(std::size_t filters, std::size_t kernel, std::size_t stride) {
  const Shape in = net_.output_shape();
  if (in.size() != 3) throw std::invalid_argument("conv after a flattening layer");
  auto layer = std::make_unique<Conv2d<T>>(next_name("conv", n_conv_), in[2], filters, kernel, stride);
  layer->weight().value = xavier_uniform<T>(layer->weight().value.shape(), *rng_);
  net_.add(std::move(layer));
  return *this;
}

template <typename T>
NetworkBuilder<T>& NetworkBuilder<T>::avg_pool(std::size_t size, std::size_t stride) {
  net_.add(std::make_unique<Pool2d<T>>(next_name("pool", n_pool_), PoolKind::average, size, stride));
  return *this;
}

template <typename T>
NetworkBuilder<T>& NetworkBuilder<T>::max_pool(std::size_t size, std::size_t stride) {
  net_.add(std::make_unique<Pool2d<T>>(next_name("pool", n_pool_), PoolKind::max, size, stride));
  return *this;
}

template <typename T>
NetworkBuilder<T>& NetworkBuilder<T>::batchnorm() {
  const Shape in = net_.output_shape();
  net_.add(std::make_unique<BatchNorm<T>>(next_name("bn", n_bn_), in.back()));
  return *this;
}

template <typename T>
NetworkBuilder<T>& NetworkBuilder<T>::dense(std::size_t outputs) {
  const std::size_t inputs = shape_size(net_.output_shape());
  auto layer = std::make_unique<Dense<T>>(next_name("fc", n_fc_), inputs, outputs);
  layer->weight().value = xavier_uniform<T>(layer->weight().value.shape(), *rng_);
  net_.add(std::move(layer));
  return *this;
}

template <typename T>
NetworkBuilder<T>& NetworkBuilder<T>::relu() {
  net_.add(std::make_unique<Relu<T>>(next_name("relu", n_act_)));
  return *this;
}

template <typename T>
NetworkBuilder<T>& NetworkBuilder<T>::sigmoid() {
  net_.add(std::make_unique<Sigmoid<T>>(next_name("sigmoid", n_act_)));
  return *this;
}

template <typename T>
Network<T> NetworkBuilder<T>::build() && {
  return std::move(net_);
}

template class Network<float>;
template class Network<double>;
template class NetworkBuilder<float>;
template class NetworkBuilder<double>;

}  // namespace kc::nn
