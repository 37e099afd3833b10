#include "kernelcount/baseline/hog_svm.hpp"

namespace kc::baseline {

std::vector<std::vector<float>> hog_batch(const std::vector<PatchSample>& samples, const HogConfig& config) {
  std::vector<std::vector<float>> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(hog_features(s.patch, config));
  return out;
}

SvmModel train_hog_svm(const std::vector<PatchSample>& samples, const HogSvmConfig& config) {
  std::vector<int> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(s.label == Label::kernel ? 1 : -1);
  return train_svm(hog_batch(samples, config.hog), labels, config.regularization, config.epochs, config.seed);
}

std::vector<Label> predict_hog_svm(const SvmModel& model, const std::vector<PatchSample>& samples,
                                   const HogConfig& config) {
  std::vector<Label> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    out.push_back(svm_classify(model, hog_features(s.patch, config)).label > 0 ? Label::kernel : Label::non_kernel);
  }
  return out;
}

}  // namespace kc::baseline
