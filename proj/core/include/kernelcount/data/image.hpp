#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace kc {

/// 8-bit RGB, row-major, three bytes per pixel.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h, std::array<std::uint8_t, 3> fill = {0, 0, 0});

  std::uint8_t* at(int x, int y) { return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  bool valid() const {
    return width > 0 && height > 0 && pixels.size() == static_cast<std::size_t>(width) * height * 3;
  }
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

enum class ImageFormat { png, ppm };

/// Decodes PNG (any bit depth/color type, converted to 8-bit RGB) or binary PPM (P6).
RgbImage decode_image(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_image(const RgbImage& image, ImageFormat format = ImageFormat::png);

RgbImage read_image(const std::filesystem::path& path);
/// Format chosen by extension: .ppm writes P6, anything else PNG.
void write_image(const RgbImage& image, const std::filesystem::path& path);

}  // namespace kc
