#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kernelcount/data/geometry.hpp"
#include "kernelcount/data/image.hpp"
#include "kernelcount/models/models.hpp"

namespace kc::detect {

struct ScanConfig {
  int window_width = 22;
  int window_height = 32;
  int stride_x = 4;
  int stride_y = 4;
  double confidence_threshold = 0.5;
  double nms_iou_threshold = 0.3;
  double count_multiplier = 2.5;
  /// Share convolution work between vertically stacked windows when the
  /// classifier allows it. Results match the per-window path to float rounding.
  bool shared_strips = true;
  std::size_t batch_size = 256;

  void validate() const;
};

struct Detection {
  Window window;
  float confidence = 0.0f;
  std::optional<PointF> center;
};

struct ScanResult {
  std::vector<Detection> detections;  // row-major grid order
  std::size_t windows_evaluated = 0;
};

struct CountReport {
  std::vector<Detection> detections;
  std::size_t visible_count = 0;
  long long estimated_total = 0;
  double seconds = 0.0;
};

/// Number of grid positions a scan visits.
std::size_t scan_window_count(int image_width, int image_height, const ScanConfig& config = {});

ScanResult sliding_window_scan(const RgbImage& image, const models::Net& classifier, const ScanConfig& config = {});

/// Greedy suppression in descending confidence (ties keep input order). The
/// result is in that same order.
std::vector<Detection> nms(std::vector<Detection> detections, double iou_threshold);

/// Regressor outputs are clamped to [0, 1] and mapped onto each window.
std::vector<Detection> refine_centers(const RgbImage& image, std::vector<Detection> detections,
                                      const models::Net& regressor);

long long count_kernels(std::size_t visible, double multiplier);
long long count_kernels(const std::vector<Detection>& detections, double multiplier);

CountReport detect_and_count(const RgbImage& image, const models::Net& classifier, const models::Net& regressor,
                             const ScanConfig& config = {});

nlohmann::json report_to_json(const CountReport& report, bool include_timing = true);

}  // namespace kc::detect
