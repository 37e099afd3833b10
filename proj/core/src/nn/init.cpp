#include "kernelcount/nn/init.hpp"

#include <cmath>
#include <stdexcept>

#include "kernelcount/util/random.hpp"

namespace kc::nn {

std::pair<std::size_t, std::size_t> fan_in_out(const Shape& shape) {
  switch (shape.size()) {
    case 2:
      return {shape[0], shape[1]};
    case 4: {
      const std::size_t receptive = shape[0] * shape[1];
      return {receptive * shape[2], receptive * shape[3]};
    }
    default:
      throw std::invalid_argument("no fan-in/fan-out convention for shape " + shape_string(shape));
  }
}

double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

template <typename T>
Tensor<T> xavier_uniform(const Shape& shape, Rng& rng) {
  const auto [fan_in, fan_out] = fan_in_out(shape);
  const double bound = xavier_bound(fan_in, fan_out);
  Tensor<T> t(shape);
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

template <typename T>
Tensor<T> xavier_init(const Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  return xavier_uniform<T>(shape, rng);
}

template Tensor<float> xavier_uniform<float>(const Shape&, Rng&);
template Tensor<double> xavier_uniform<double>(const Shape&, Rng&);
template Tensor<float> xavier_init<float>(const Shape&, std::uint64_t);
template Tensor<double> xavier_init<double>(const Shape&, std::uint64_t);

}  // namespace kc::nn
