#include "kernelcount/data/patch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace kc {

namespace {

struct Tap {
  int i0, i1;
  float w1;
};

// Source taps for resampling `in` samples onto `out` samples (half-pixel centers).
std::vector<Tap> taps(int in, int out) {
  std::vector<Tap> t(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int j = 0; j < out; ++j) {
    double s = (j + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, in - 1);
    t[static_cast<std::size_t>(j)] = {i0, i1, static_cast<float>(s - i0)};
  }
  return t;
}

}  // namespace

void resample_window(const RgbImage& image, const Window& window, int out_width, int out_height, float* out) {
  if (!window.inside(image.width, image.height)) {
    throw std::out_of_range("window (" + std::to_string(window.x) + "," + std::to_string(window.y) + " " +
                            std::to_string(window.width) + "x" + std::to_string(window.height) +
                            ") is not inside the " + std::to_string(image.width) + "x" +
                            std::to_string(image.height) + " image");
  }
  if (out_width <= 0 || out_height <= 0) throw std::invalid_argument("resample target must be non-empty");
  const auto xs = taps(window.width, out_width);
  const auto ys = taps(window.height, out_height);
  constexpr float inv255 = 1.0f / 255.0f;
  for (int oy = 0; oy < out_height; ++oy) {
    const Tap& ty = ys[static_cast<std::size_t>(oy)];
    const std::uint8_t* r0 = image.at(window.x, window.y + ty.i0);
    const std::uint8_t* r1 = image.at(window.x, window.y + ty.i1);
    for (int ox = 0; ox < out_width; ++ox) {
      const Tap& tx = xs[static_cast<std::size_t>(ox)];
      for (int c = 0; c < 3; ++c) {
        const float a = r0[tx.i0 * 3 + c] + tx.w1 * (r0[tx.i1 * 3 + c] - r0[tx.i0 * 3 + c]);
        const float b = r1[tx.i0 * 3 + c] + tx.w1 * (r1[tx.i1 * 3 + c] - r1[tx.i0 * 3 + c]);
        *out++ = (a + ty.w1 * (b - a)) * inv255;
      }
    }
  }
}

Patch extract_patch(const RgbImage& image, const Window& window) {
  Patch p({kPatchSize, kPatchSize, 3});
  resample_window(image, window, kPatchSize, kPatchSize, p.data());
  return p;
}

RgbImage resize_bilinear(const RgbImage& image, int width, int height) {
  nn::Tensor<float> t({static_cast<std::size_t>(height), static_cast<std::size_t>(width), 3});
  resample_window(image, {0, 0, image.width, image.height}, width, height, t.data());
  return tensor_to_image(t);
}

RgbImage tensor_to_image(const nn::Tensor<float>& t) {
  if (t.rank() != 3 || t.dim(2) != 3) throw std::invalid_argument("expected an H x W x 3 tensor");
  RgbImage img(static_cast<int>(t.dim(1)), static_cast<int>(t.dim(0)));
  for (std::size_t i = 0; i < t.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(t[i], 0.0f, 1.0f) * 255.0f));
  }
  return img;
}

nn::Tensor<float> image_to_tensor(const RgbImage& image) {
  nn::Tensor<float> t({static_cast<std::size_t>(image.height), static_cast<std::size_t>(image.width), 3});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = image.pixels[i] * (1.0f / 255.0f);
  return t;
}

}  // namespace kc
