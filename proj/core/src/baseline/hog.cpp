#include "kernelcount/baseline/hog.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace kc::baseline {

GrayImage to_grayscale(const Patch& patch) {
  if (patch.rank() != 3 || patch.dim(2) != 3) {
    throw std::invalid_argument("expected an H x W x 3 patch, got " + nn::shape_string(patch.shape()));
  }
  GrayImage g{static_cast<int>(patch.dim(1)), static_cast<int>(patch.dim(0)), {}};
  g.values.resize(static_cast<std::size_t>(g.width) * g.height);
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    g.values[i] = 0.299 * patch[3 * i] + 0.587 * patch[3 * i + 1] + 0.114 * patch[3 * i + 2];
  }
  return g;
}

namespace {

void check(int width, int height, const HogConfig& c) {
  if (c.cell_size < 1 || c.cells_per_block < 1 || c.bins < 2) throw std::invalid_argument("invalid HOG configuration");
  if (width <= 0 || height <= 0 || width % c.cell_size != 0 || height % c.cell_size != 0) {
    throw std::invalid_argument("image " + std::to_string(width) + "x" + std::to_string(height) +
                                " is not divisible into " + std::to_string(c.cell_size) + "-pixel cells");
  }
  if (width / c.cell_size < c.cells_per_block || height / c.cell_size < c.cells_per_block) {
    throw std::invalid_argument("image too small for one HOG block");
  }
}

}  // namespace

std::size_t hog_length(int width, int height, const HogConfig& c) {
  check(width, height, c);
  const int bx = width / c.cell_size - c.cells_per_block + 1;
  const int by = height / c.cell_size - c.cells_per_block + 1;
  return static_cast<std::size_t>(bx) * by * c.cells_per_block * c.cells_per_block * c.bins;
}

std::vector<float> hog_features(const GrayImage& img, const HogConfig& c) {
  check(img.width, img.height, c);
  if (img.values.size() != static_cast<std::size_t>(img.width) * img.height) {
    throw std::invalid_argument("grayscale buffer size mismatch");
  }
  const int cx = img.width / c.cell_size, cy = img.height / c.cell_size;
  const double range = c.signed_orientation ? 2.0 * std::numbers::pi : std::numbers::pi;
  const double bin_width = range / c.bins;
  std::vector<double> hist(static_cast<std::size_t>(cx) * cy * c.bins, 0.0);

  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double gx = img.at(std::min(x + 1, img.width - 1), y) - img.at(std::max(x - 1, 0), y);
      const double gy = img.at(x, std::min(y + 1, img.height - 1)) - img.at(x, std::max(y - 1, 0));
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx);
      if (angle < 0) angle += 2.0 * std::numbers::pi;
      angle = std::fmod(angle, range);
      // Bin b is centered at b * bin_width; votes wrap around.
      const double pos = angle / bin_width;
      const double lo = std::floor(pos);
      const double frac = pos - lo;
      const int b0 = (static_cast<int>(lo) + c.bins) % c.bins;
      const int b1 = (b0 + 1) % c.bins;
      double* cell = hist.data() + (static_cast<std::size_t>(y / c.cell_size) * cx + x / c.cell_size) * c.bins;
      cell[b0] += mag * (1.0 - frac);
      cell[b1] += mag * frac;
    }
  }

  std::vector<float> out;
  out.reserve(hog_length(img.width, img.height, c));
  const int k = c.cells_per_block;
  std::vector<double> block(static_cast<std::size_t>(k) * k * c.bins);
  for (int by = 0; by + k <= cy; ++by) {
    for (int bx = 0; bx + k <= cx; ++bx) {
      std::size_t n = 0;
      double sq = 0.0;
      for (int j = 0; j < k; ++j) {
        for (int i = 0; i < k; ++i) {
          const double* cell = hist.data() + (static_cast<std::size_t>(by + j) * cx + bx + i) * c.bins;
          for (int b = 0; b < c.bins; ++b) {
            block[n++] = cell[b];
            sq += cell[b] * cell[b];
          }
        }
      }
      const double norm = std::sqrt(sq + c.epsilon * c.epsilon);
      for (double v : block) out.push_back(static_cast<float>(v / norm));
    }
  }
  return out;
}

std::vector<float> hog_features(const Patch& patch, const HogConfig& config) {
  return hog_features(to_grayscale(patch), config);
}

}  // namespace kc::baseline
