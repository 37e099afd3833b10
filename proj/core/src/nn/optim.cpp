#include "kernelcount/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace kc::nn {

template <typename T>
void adam_step(std::span<T> weights, std::span<const T> grads, AdamState<T>& state, double lr,
               const AdamConfig& config) {
  if (weights.size() != grads.size()) throw std::invalid_argument("adam_step: weight/gradient size mismatch");
  if (state.first_moment.empty() && state.second_moment.empty()) {
    state.first_moment.assign(weights.size(), T(0));
    state.second_moment.assign(weights.size(), T(0));
  }
  if (state.first_moment.size() != weights.size() || state.second_moment.size() != weights.size()) {
    throw std::invalid_argument("adam_step: moment size mismatch");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw std::domain_error("adam_step: non-finite gradient at index " + std::to_string(i));
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(config.beta1);
  const T b2 = static_cast<T>(config.beta2);
  const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(config.beta1, t)));
  const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(config.beta2, t)));
  const T step = static_cast<T>(lr);
  const T eps = static_cast<T>(config.epsilon);
  T* m = state.first_moment.data();
  T* v = state.second_moment.data();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const T g = grads[i];
    m[i] = b1 * m[i] + (T(1) - b1) * g;
    v[i] = b2 * v[i] + (T(1) - b2) * g * g;
    weights[i] -= step * (m[i] * c1) / (std::sqrt(v[i] * c2) + eps);
  }
}

template <typename T>
Adam<T>::Adam(std::vector<Param<T>*> params, AdamConfig config)
    : params_(std::move(params)), states_(params_.size()), config_(config) {}

template <typename T>
void Adam<T>::step(double lr) {
  // Validate everything first so a bad gradient leaves all weights untouched.
  for (const auto* p : params_) {
    if (!p->grad.all_finite()) throw std::domain_error("adam: non-finite gradient in " + p->name);
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    adam_step<T>(params_[i]->value.values(), params_[i]->grad.values(), states_[i], lr, config_);
  }
}

template void adam_step(std::span<float>, std::span<const float>, AdamState<float>&, double, const AdamConfig&);
template void adam_step(std::span<double>, std::span<const double>, AdamState<double>&, double, const AdamConfig&);
template class Adam<float>;
template class Adam<double>;

}  // namespace kc::nn
