#pragma once

#include <vector>

#include "kernelcount/data/patch.hpp"

namespace kc::baseline {

struct HogConfig {
  int cell_size = 4;
  int cells_per_block = 2;
  int bins = 9;
  bool signed_orientation = false;
  double epsilon = 1e-6;
};

/// Row-major single-channel image.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Luma conversion, 0.299 R + 0.587 G + 0.114 B.
GrayImage to_grayscale(const Patch& patch);

std::size_t hog_length(int width, int height, const HogConfig& config = {});

/// Cell histograms with bilinear orientation voting, grouped into blocks at a
/// one-cell stride, each block L2-normalized as v / sqrt(|v|^2 + eps^2).
std::vector<float> hog_features(const GrayImage& image, const HogConfig& config = {});
std::vector<float> hog_features(const Patch& patch, const HogConfig& config = {});

}  // namespace kc::baseline
