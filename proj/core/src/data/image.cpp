#include "kernelcount/data/image.hpp"

#include <png.h>

#include <cctype>
#include <cstring>
#include <stdexcept>
#include <string>

#include "kernelcount/util/binary_io.hpp"

namespace kc {

RgbImage::RgbImage(int w, int h, std::array<std::uint8_t, 3> fill) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw std::invalid_argument("image dimensions must be positive");
  pixels.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < pixels.size(); i += 3) std::memcpy(&pixels[i], fill.data(), 3);
}

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw std::runtime_error(std::string("PNG decode failed: ") + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  if (img.width == 0 || img.height == 0 || img.width > (1u << 15) || img.height > (1u << 15)) {
    png_image_free(&img);
    throw std::runtime_error("PNG has unsupported dimensions");
  }
  RgbImage out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw std::runtime_error("PNG decode failed: " + msg);
  }
  return out;
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(img, size, 0, image.pixels.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("PNG encode failed: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("PNG encode failed: ") + img.message);
  }
  out.resize(size);
  return out;
}

// Reads one whitespace-delimited PPM header integer, skipping '#' comments.
unsigned long ppm_field(std::span<const std::uint8_t> bytes, std::size_t& pos, const char* what) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
    throw std::runtime_error(std::string("PPM header: missing ") + what);
  }
  unsigned long v = 0;
  while (pos < bytes.size() && std::isdigit(bytes[pos])) {
    v = v * 10 + (bytes[pos++] - '0');
    if (v > (1ul << 20)) throw std::runtime_error(std::string("PPM header: ") + what + " too large");
  }
  return v;
}

RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 2;
  const auto w = ppm_field(bytes, pos, "width");
  const auto h = ppm_field(bytes, pos, "height");
  const auto maxval = ppm_field(bytes, pos, "maxval");
  if (w == 0 || h == 0) throw std::runtime_error("PPM has zero dimension");
  if (maxval == 0 || maxval > 255) throw std::runtime_error("PPM maxval must be in 1..255");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw std::runtime_error("PPM header not terminated");
  ++pos;
  RgbImage out(static_cast<int>(w), static_cast<int>(h));
  if (bytes.size() - pos < out.pixels.size()) {
    throw std::runtime_error("PPM pixel data truncated: expected " + std::to_string(out.pixels.size()) + " bytes, have " +
                             std::to_string(bytes.size() - pos));
  }
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const unsigned v = bytes[pos + i];
    if (v > maxval) throw std::runtime_error("PPM sample exceeds maxval");
    out.pixels[i] = static_cast<std::uint8_t>(maxval == 255 ? v : (v * 255 + maxval / 2) / maxval);
  }
  return out;
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& image) {
  const std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

}  // namespace

RgbImage decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes);
  throw std::runtime_error("unrecognized image format (expected PNG or binary PPM)");
}

std::vector<std::uint8_t> encode_image(const RgbImage& image, ImageFormat format) {
  if (!image.valid()) throw std::invalid_argument("cannot encode an invalid image");
  return format == ImageFormat::png ? encode_png(image) : encode_ppm(image);
}

RgbImage read_image(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  try {
    return decode_image(bytes);
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_image(const RgbImage& image, const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  const auto format = (ext == ".ppm" || ext == ".PPM") ? ImageFormat::ppm : ImageFormat::png;
  io::write_file(path, encode_image(image, format));
}

}  // namespace kc
