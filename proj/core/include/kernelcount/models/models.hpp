#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kernelcount/data/dataset.hpp"
#include "kernelcount/data/geometry.hpp"
#include "kernelcount/data/patch.hpp"
#include "kernelcount/nn/network.hpp"

namespace kc::models {

using Net = nn::Network<float>;

/// Kernel / non-kernel classifier: five 3x3 valid convolutions with batch norm
/// and ReLU, average-pool downsampling, FC-256 and FC-128 (batch norm + ReLU),
/// then a single sigmoid unit.
template <typename T = float>
nn::Network<T> build_classifier(std::uint64_t seed);

/// Kernel-center regressor: the same convolution trunk with max-pool
/// downsampling and ReLU only, FC-100/50/10, and a linear 2-unit output.
template <typename T = float>
nn::Network<T> build_regressor(std::uint64_t seed);

/// One row of an architecture table: type/stride, filter size, filter or
/// unit count, and per-sample output shape.
struct ArchitectureRow {
  std::string type;  // "Conv/s1", "Avg pool/s2", "Max pool/s2", "FC-256", "Sigmoid"
  std::size_t filter_size = 0;
  std::size_t filters = 0;
  nn::Shape output;
  friend bool operator==(const ArchitectureRow&, const ArchitectureRow&) = default;
};

/// Collapses a network into table rows (normalization and ReLU fold into the
/// layer they follow; a trailing FC-1 + sigmoid reads as "Sigmoid").
std::vector<ArchitectureRow> describe_architecture(const Net& net);

/// Confidence in (0, 1) that the 32x32x3 patch holds exactly one kernel.
float classify_patch(const Net& classifier, const Patch& patch);
std::vector<float> classify_patches(const Net& classifier, std::span<const Patch> patches);

/// Raw normalized (x, y) center; the caller clamps to [0, 1] when mapping to pixels.
PointF predict_center(const Net& regressor, const Patch& patch);
std::vector<PointF> predict_centers(const Net& regressor, std::span<const Patch> patches);

/// Kernel when the confidence reaches `threshold`.
std::vector<Label> classify_samples(const Net& classifier, const std::vector<PatchSample>& samples,
                                    float threshold = 0.5f);
/// Mean Euclidean distance in patch pixels between predicted and true centers.
double mean_center_error(const Net& regressor, const std::vector<PatchSample>& samples);

/// Builds the matching architecture and loads weights from a KCW1 file.
Net load_classifier(const std::string& path);
Net load_regressor(const std::string& path);

}  // namespace kc::models
