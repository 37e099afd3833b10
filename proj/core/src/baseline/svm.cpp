#include "kernelcount/baseline/svm.hpp"

#include <cmath>
#include <stdexcept>

#include "kernelcount/util/binary_io.hpp"
#include "kernelcount/util/random.hpp"

namespace kc::baseline {

namespace {
constexpr std::uint32_t kVersion = 1;
}

SvmModel train_svm(const std::vector<std::vector<float>>& features, std::span<const int> labels,
                   double regularization, std::size_t epochs, std::uint64_t seed) {
  if (features.size() != labels.size()) throw std::invalid_argument("feature and label counts differ");
  if (features.empty()) throw std::invalid_argument("no training samples");
  if (!(regularization > 0.0)) throw std::invalid_argument("regularization must be positive");
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  const std::size_t dim = features.front().size();
  std::size_t pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1 && labels[i] != -1) throw std::invalid_argument("SVM labels must be +1 or -1");
    if (features[i].size() != dim) throw std::invalid_argument("inconsistent feature lengths");
    pos += labels[i] == 1;
  }
  if (pos == 0 || pos == labels.size()) throw std::invalid_argument("SVM training needs samples of both classes");

  const double lambda = regularization;
  // The bias rides along as a constant feature of value 1 at index dim.
  std::vector<double> w(dim + 1, 0.0);
  // w is kept as scale * v so the shrink step is O(1).
  double scale = 1.0;
  Rng rng(seed);
  std::size_t t = 0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t i : permutation(features.size(), rng)) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t + 1));
      const auto& x = features[i];
      const double y = labels[i];
      double dot = 0.0;
      for (std::size_t d = 0; d < dim; ++d) dot += w[d] * x[d];
      const double margin = y * scale * (dot + w[dim]);
      scale *= 1.0 - eta * lambda;
      if (margin < 1.0) {
        const double step = eta * y / scale;
        for (std::size_t d = 0; d < dim; ++d) w[d] += step * x[d];
        w[dim] += step;
      }
      if (scale < 1e-9) {
        for (double& v : w) v *= scale;
        scale = 1.0;
      }
    }
  }
  SvmModel model;
  model.weights.resize(dim);
  for (std::size_t d = 0; d < dim; ++d) model.weights[d] = static_cast<float>(w[d] * scale);
  model.bias = static_cast<float>(w[dim] * scale);
  model.regularization = static_cast<float>(regularization);
  return model;
}

double svm_margin(const SvmModel& model, std::span<const float> features) {
  if (features.size() != model.weights.size()) {
    throw std::invalid_argument("feature length " + std::to_string(features.size()) + " does not match model length " +
                                std::to_string(model.weights.size()));
  }
  double m = model.bias;
  for (std::size_t d = 0; d < features.size(); ++d) m += static_cast<double>(model.weights[d]) * features[d];
  return m;
}

SvmDecision svm_classify(const SvmModel& model, std::span<const float> features) {
  const double m = svm_margin(model, features);
  return {m >= 0.0 ? 1 : -1, m};
}

std::vector<std::uint8_t> encode_svm(const SvmModel& model) {
  io::ByteWriter w;
  w.bytes("KSVM");
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(model.weights.size()));
  w.f32(model.regularization);
  w.f32(model.bias);
  w.f32s(model.weights);
  return w.take();
}

SvmModel decode_svm(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.bytes(4, "magic") != "KSVM") throw std::runtime_error("not an SVM model file (bad magic)");
  const auto version = r.u32("version");
  if (version != kVersion) throw std::runtime_error("unsupported SVM model version " + std::to_string(version));
  SvmModel m;
  const auto n = r.u32("feature length");
  m.regularization = r.f32("regularization");
  m.bias = r.f32("bias");
  m.weights.resize(n);
  r.f32s(m.weights, "weights");
  if (r.remaining() != 0) throw std::runtime_error("trailing bytes after SVM weights");
  return m;
}

void save_svm(const std::string& path, const SvmModel& model) { io::write_file(path, encode_svm(model)); }

SvmModel load_svm(const std::string& path) { return decode_svm(io::read_file(path)); }

}  // namespace kc::baseline
