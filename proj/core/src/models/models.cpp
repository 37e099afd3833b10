#include "kernelcount/models/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kernelcount/nn/serialize.hpp"

namespace kc::models {

namespace {

const nn::Shape kInputShape{kPatchSize, kPatchSize, 3};
constexpr std::size_t kInferChunk = 256;

void require_patch(const Patch& p) {
  if (p.shape() != kInputShape) {
    throw std::invalid_argument("expected a 32x32x3 patch, got " + nn::shape_string(p.shape()));
  }
}

nn::Tensor<float> batch_of(std::span<const Patch> patches) {
  std::vector<const nn::Tensor<float>*> ptrs;
  ptrs.reserve(patches.size());
  for (const auto& p : patches) {
    require_patch(p);
    ptrs.push_back(&p);
  }
  return nn::stack<float>(ptrs);
}

}  // namespace

template <typename T>
nn::Network<T> build_classifier(std::uint64_t seed) {
  nn::NetworkBuilder<T> b(kInputShape, seed);
  b.conv(32, 3).batchnorm().relu();
  b.conv(32, 3).batchnorm().relu();
  b.avg_pool(2, 2);
  b.conv(64, 3).batchnorm().relu();
  b.conv(64, 3).batchnorm().relu();
  b.conv(64, 3).batchnorm().relu();
  b.avg_pool(7, 1);
  b.dense(256).batchnorm().relu();
  b.dense(128).batchnorm().relu();
  b.dense(1).sigmoid();
  return std::move(b).build();
}

template <typename T>
nn::Network<T> build_regressor(std::uint64_t seed) {
  nn::NetworkBuilder<T> b(kInputShape, seed);
  b.conv(32, 3).relu();
  b.conv(32, 3).relu();
  b.max_pool(2, 2);
  b.conv(64, 3).relu();
  b.conv(64, 3).relu();
  b.conv(64, 3).relu();
  b.max_pool(2, 2);
  b.dense(100).relu();
  b.dense(50).relu();
  b.dense(10).relu();
  b.dense(2);
  return std::move(b).build();
}

template nn::Network<float> build_classifier<float>(std::uint64_t);
template nn::Network<double> build_classifier<double>(std::uint64_t);
template nn::Network<float> build_regressor<float>(std::uint64_t);
template nn::Network<double> build_regressor<double>(std::uint64_t);

std::vector<ArchitectureRow> describe_architecture(const Net& net) {
  std::vector<ArchitectureRow> rows;
  const auto shapes = net.layer_output_shapes();
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& layer = net.layer(i);
    switch (layer.kind()) {
      case nn::LayerKind::conv2d: {
        const auto& conv = static_cast<const nn::Conv2d<float>&>(layer);
        rows.push_back({"Conv/s" + std::to_string(conv.stride()), conv.kernel(), conv.filters(), shapes[i]});
        break;
      }
      case nn::LayerKind::avgpool:
      case nn::LayerKind::maxpool: {
        const auto& pool = static_cast<const nn::Pool2d<float>&>(layer);
        const std::string kind = layer.kind() == nn::LayerKind::avgpool ? "Avg pool/s" : "Max pool/s";
        rows.push_back({kind + std::to_string(pool.stride()), pool.size(), 0, shapes[i]});
        break;
      }
      case nn::LayerKind::dense: {
        const auto& fc = static_cast<const nn::Dense<float>&>(layer);
        rows.push_back({"FC-" + std::to_string(fc.outputs()), 0, fc.outputs(), shapes[i]});
        break;
      }
      case nn::LayerKind::sigmoid:
        if (!rows.empty() && rows.back().type == "FC-1") {
          rows.back().type = "Sigmoid";
        } else {
          rows.push_back({"Sigmoid", 0, 0, shapes[i]});
        }
        break;
      case nn::LayerKind::batchnorm:
      case nn::LayerKind::relu:
        break;
    }
  }
  return rows;
}

float classify_patch(const Net& classifier, const Patch& patch) {
  return classify_patches(classifier, std::span<const Patch>(&patch, 1)).front();
}

std::vector<float> classify_patches(const Net& classifier, std::span<const Patch> patches) {
  std::vector<float> conf;
  conf.reserve(patches.size());
  for (std::size_t start = 0; start < patches.size(); start += kInferChunk) {
    const auto out = classifier.infer(batch_of(patches.subspan(start, std::min(kInferChunk, patches.size() - start))));
    conf.insert(conf.end(), out.values().begin(), out.values().end());
  }
  return conf;
}

PointF predict_center(const Net& regressor, const Patch& patch) {
  return predict_centers(regressor, std::span<const Patch>(&patch, 1)).front();
}

std::vector<PointF> predict_centers(const Net& regressor, std::span<const Patch> patches) {
  if (regressor.output_shape() != nn::Shape{2}) throw std::invalid_argument("regressor must produce 2 outputs");
  std::vector<PointF> centers;
  centers.reserve(patches.size());
  for (std::size_t start = 0; start < patches.size(); start += kInferChunk) {
    const auto out = regressor.infer(batch_of(patches.subspan(start, std::min(kInferChunk, patches.size() - start))));
    for (std::size_t i = 0; i < out.dim(0); ++i) centers.push_back({out[2 * i], out[2 * i + 1]});
  }
  return centers;
}

std::vector<Label> classify_samples(const Net& classifier, const std::vector<PatchSample>& samples, float threshold) {
  std::vector<Patch> patches;
  patches.reserve(samples.size());
  for (const auto& s : samples) patches.push_back(s.patch);
  const auto conf = classify_patches(classifier, patches);
  std::vector<Label> labels(conf.size());
  for (std::size_t i = 0; i < conf.size(); ++i) labels[i] = conf[i] >= threshold ? Label::kernel : Label::non_kernel;
  return labels;
}

double mean_center_error(const Net& regressor, const std::vector<PatchSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("no samples to score");
  std::vector<Patch> patches;
  patches.reserve(samples.size());
  for (const auto& s : samples) {
    if (!s.center) throw std::invalid_argument("sample without a kernel center");
    patches.push_back(s.patch);
  }
  const auto pred = predict_centers(regressor, patches);
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    total += std::hypot(pred[i].x * kPatchSize - samples[i].center->x, pred[i].y * kPatchSize - samples[i].center->y);
  }
  return total / static_cast<double>(pred.size());
}

Net load_classifier(const std::string& path) {
  Net net = build_classifier<float>(0);
  nn::load_weights(path, net);
  return net;
}

Net load_regressor(const std::string& path) {
  Net net = build_regressor<float>(0);
  nn::load_weights(path, net);
  return net;
}

}  // namespace kc::models
