#pragma once

#include <cstdint>
#include <utility>

#include "kernelcount/nn/tensor.hpp"

namespace kc {
class Rng;
}

namespace kc::nn {

/// (fan_in, fan_out) for In x Out dense weights or k x k x Cin x Cout filters.
std::pair<std::size_t, std::size_t> fan_in_out(const Shape& shape);

/// Half-width of the Xavier/Glorot uniform range: sqrt(6 / (fan_in + fan_out)).
double xavier_bound(std::size_t fan_in, std::size_t fan_out);

template <typename T>
Tensor<T> xavier_uniform(const Shape& shape, Rng& rng);

/// Seeded convenience form; identical seeds give identical tensors.
template <typename T>
Tensor<T> xavier_init(const Shape& shape, std::uint64_t seed);

}  // namespace kc::nn
