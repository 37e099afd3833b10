#pragma once

#include <cstdint>
#include <vector>

#include "kernelcount/baseline/hog.hpp"
#include "kernelcount/baseline/svm.hpp"
#include "kernelcount/data/dataset.hpp"

namespace kc::baseline {

struct HogSvmConfig {
  HogConfig hog;
  double regularization = 1e-4;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
};

std::vector<std::vector<float>> hog_batch(const std::vector<PatchSample>& samples, const HogConfig& config = {});

/// Kernel is the +1 class.
SvmModel train_hog_svm(const std::vector<PatchSample>& samples, const HogSvmConfig& config);
std::vector<Label> predict_hog_svm(const SvmModel& model, const std::vector<PatchSample>& samples,
                                   const HogConfig& config = {});

}  // namespace kc::baseline
