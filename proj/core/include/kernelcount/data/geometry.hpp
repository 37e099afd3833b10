#pragma once

#include <algorithm>

namespace kc {

struct PointF {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const PointF&, const PointF&) = default;
};

/// Axis-aligned pixel rectangle; (x, y) is the top-left corner.
struct Window {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  long area() const { return static_cast<long>(width) * height; }
  bool contains(const PointF& p) const {
    return p.x >= x && p.x < x + width && p.y >= y && p.y < y + height;
  }
  bool inside(int image_width, int image_height) const {
    return width > 0 && height > 0 && x >= 0 && y >= 0 && x + width <= image_width && y + height <= image_height;
  }
  friend bool operator==(const Window&, const Window&) = default;
};

/// Intersection over union; 0 for disjoint or degenerate windows.
inline double iou(const Window& a, const Window& b) {
  const long ix = std::max(0, std::min(a.x + a.width, b.x + b.width) - std::max(a.x, b.x));
  const long iy = std::max(0, std::min(a.y + a.height, b.y + b.height) - std::max(a.y, b.y));
  const long inter = ix * iy;
  const long uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

}  // namespace kc
