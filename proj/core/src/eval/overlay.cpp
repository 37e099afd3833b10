#include "kernelcount/eval/overlay.hpp"

#include <cmath>
#include <stdexcept>

namespace kc::eval {

namespace {

void put(RgbImage& img, int x, int y, const std::array<std::uint8_t, 3>& color) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  auto* p = img.pixels.data() + (static_cast<std::size_t>(y) * img.width + x) * 3;
  p[0] = color[0];
  p[1] = color[1];
  p[2] = color[2];
}

}  // namespace

RgbImage render_overlay(const RgbImage& image, const std::vector<detect::Detection>& detections,
                        const OverlayStyle& style) {
  if (!image.valid()) throw std::invalid_argument("invalid image");
  RgbImage out = image;
  for (const auto& d : detections) {
    const Window& w = d.window;
    if (!w.inside(image.width, image.height)) throw std::invalid_argument("detection window outside the image");
    if (style.draw_boxes) {
      for (int x = w.x; x < w.x + w.width; ++x) {
        put(out, x, w.y, style.box_color);
        put(out, x, w.y + w.height - 1, style.box_color);
      }
      for (int y = w.y; y < w.y + w.height; ++y) {
        put(out, w.x, y, style.box_color);
        put(out, w.x + w.width - 1, y, style.box_color);
      }
    }
    const PointF c = d.center.value_or(PointF{w.x + w.width / 2.0, w.y + w.height / 2.0});
    // Pixel (x, y) covers [x, x+1); dot membership is tested at pixel centers.
    const int r = style.dot_radius;
    const int px = static_cast<int>(std::floor(c.x)), py = static_cast<int>(std::floor(c.y));
    for (int y = py - r - 1; y <= py + r + 1; ++y) {
      for (int x = px - r - 1; x <= px + r + 1; ++x) {
        const double dx = x + 0.5 - c.x, dy = y + 0.5 - c.y;
        if (dx * dx + dy * dy <= static_cast<double>(r) * r + 0.5) put(out, x, y, style.dot_color);
      }
    }
  }
  return out;
}

}  // namespace kc::eval
