#pragma once

#include "kernelcount/data/geometry.hpp"
#include "kernelcount/data/image.hpp"
#include "kernelcount/nn/tensor.hpp"

namespace kc {

/// Side length of the square network input.
inline constexpr int kPatchSize = 32;

using Patch = nn::Tensor<float>;  // kPatchSize x kPatchSize x 3, values in [0, 1]

/// Bilinear resample of `window` into an out_width x out_height x 3 float
/// buffer scaled to [0, 1]. Sample positions use pixel centers and are clamped
/// to the window, so a same-size resample reproduces the crop exactly.
void resample_window(const RgbImage& image, const Window& window, int out_width, int out_height, float* out);

/// Crop `window`, resize to kPatchSize x kPatchSize, normalize to [0, 1].
Patch extract_patch(const RgbImage& image, const Window& window);

RgbImage resize_bilinear(const RgbImage& image, int width, int height);

/// Quantizes a [0, 1] H x W x 3 tensor to an 8-bit image (round to nearest).
RgbImage tensor_to_image(const nn::Tensor<float>& t);
nn::Tensor<float> image_to_tensor(const RgbImage& image);

}  // namespace kc
