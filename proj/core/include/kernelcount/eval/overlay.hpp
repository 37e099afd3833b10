#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "kernelcount/detect/detector.hpp"

namespace kc::eval {

struct OverlayStyle {
  int dot_radius = 2;
  bool draw_boxes = false;
  std::array<std::uint8_t, 3> dot_color{255, 0, 0};
  std::array<std::uint8_t, 3> box_color{0, 255, 0};
};

/// Copy of `image` with a filled dot at each detection center (the window
/// center when no refined center exists) and optional box outlines.
RgbImage render_overlay(const RgbImage& image, const std::vector<detect::Detection>& detections,
                        const OverlayStyle& style = {});

}  // namespace kc::eval
