#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace kc::baseline {

struct SvmModel {
  std::vector<float> weights;
  float bias = 0.0f;
  float regularization = 0.0f;
};

struct SvmDecision {
  int label = 0;  // +1 or -1
  double margin = 0.0;
};

/// Linear soft-margin SVM by Pegasos-style stochastic subgradient descent on
/// lambda/2 |w|^2 + mean hinge loss with step size 1/(lambda t). The bias is
/// learned as the weight of a constant unit feature, so it is also shrunk.
/// Labels must be +1 or -1 and both classes present.
SvmModel train_svm(const std::vector<std::vector<float>>& features, std::span<const int> labels,
                   double regularization, std::size_t epochs, std::uint64_t seed);

double svm_margin(const SvmModel& model, std::span<const float> features);
SvmDecision svm_classify(const SvmModel& model, std::span<const float> features);

std::vector<std::uint8_t> encode_svm(const SvmModel& model);
SvmModel decode_svm(std::span<const std::uint8_t> bytes);
void save_svm(const std::string& path, const SvmModel& model);
SvmModel load_svm(const std::string& path);

}  // namespace kc::baseline
