#include "kernelcount/detect/detector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "kernelcount/data/patch.hpp"
#include "kernelcount/nn/layers.hpp"

namespace kc::detect {

void ScanConfig::validate() const {
  if (window_width < 1 || window_height < 1) throw std::invalid_argument("window size must be positive");
  if (stride_x < 1 || stride_y < 1) throw std::invalid_argument("strides must be at least 1");
  if (!(confidence_threshold > 0.0 && confidence_threshold <= 1.0)) {
    throw std::invalid_argument("confidence threshold must be in (0, 1]");
  }
  if (!(nms_iou_threshold >= 0.0 && nms_iou_threshold <= 1.0)) {
    throw std::invalid_argument("NMS IoU threshold must be in [0, 1]");
  }
  if (!(count_multiplier > 0.0) || !std::isfinite(count_multiplier)) {
    throw std::invalid_argument("count multiplier must be positive");
  }
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
}

std::size_t scan_window_count(int width, int height, const ScanConfig& c) {
  if (width < c.window_width || height < c.window_height) return 0;
  const auto nx = static_cast<std::size_t>((width - c.window_width) / c.stride_x + 1);
  const auto ny = static_cast<std::size_t>((height - c.window_height) / c.stride_y + 1);
  return nx * ny;
}

namespace {

constexpr std::size_t kChannels = 3;

/// Where the convolutional trunk ends and how far it moves per output row.
struct Trunk {
  std::size_t end = 0;         // index of the first dense layer
  std::size_t row_stride = 1;  // input rows per trunk output row
};

std::optional<Trunk> shared_trunk(const models::Net& net) {
  Trunk t;
  for (; t.end < net.size(); ++t.end) {
    const auto& layer = net.layer(t.end);
    switch (layer.kind()) {
      case nn::LayerKind::conv2d:
        t.row_stride *= static_cast<const nn::Conv2d<float>&>(layer).stride();
        break;
      case nn::LayerKind::avgpool:
      case nn::LayerKind::maxpool:
        t.row_stride *= static_cast<const nn::Pool2d<float>&>(layer).stride();
        break;
      case nn::LayerKind::batchnorm:
      case nn::LayerKind::relu:
      case nn::LayerKind::sigmoid:
        break;
      case nn::LayerKind::dense:
        return t.end > 0 ? std::optional<Trunk>(t) : std::nullopt;
    }
  }
  return std::nullopt;
}

void emit(std::vector<Detection>& out, const Window& w, float confidence, double threshold) {
  if (confidence >= threshold) out.push_back({w, confidence, std::nullopt});
}

/// Every window is resampled to a full patch and classified in batches.
void scan_windows(const RgbImage& image, const models::Net& net, const ScanConfig& c, ScanResult& result) {
  constexpr std::size_t values = static_cast<std::size_t>(kPatchSize) * kPatchSize * kChannels;
  std::vector<Window> windows;
  for (int y = 0; y + c.window_height <= image.height; y += c.stride_y) {
    for (int x = 0; x + c.window_width <= image.width; x += c.stride_x) {
      windows.push_back({x, y, c.window_width, c.window_height});
    }
  }
  for (std::size_t start = 0; start < windows.size(); start += c.batch_size) {
    const std::size_t n = std::min(c.batch_size, windows.size() - start);
    nn::Tensor<float> batch({n, kPatchSize, kPatchSize, kChannels});
    for (std::size_t i = 0; i < n; ++i) {
      resample_window(image, windows[start + i], kPatchSize, kPatchSize, batch.data() + i * values);
    }
    const auto conf = net.infer(batch);
    for (std::size_t i = 0; i < n; ++i) emit(result.detections, windows[start + i], conf[i], c.confidence_threshold);
  }
  result.windows_evaluated += windows.size();
}

/// A window as tall as the network input needs only a horizontal resample, so
/// every window in one column is a row range of the same resampled strip. The
/// trunk runs once per strip and the head runs on per-window slices of it.
void scan_strips(const RgbImage& image, const models::Net& net, const ScanConfig& c, const Trunk& trunk,
                 ScanResult& result) {
  const auto h = static_cast<std::size_t>(image.height);
  nn::Tensor<float> strip({1, h, kPatchSize, kChannels});
  const auto per_window = net.layer_output_shapes()[trunk.end - 1];  // rows x cols x channels
  const std::size_t win_rows = per_window[0];
  const std::size_t row_values = per_window[1] * per_window[2];
  const std::size_t slice = win_rows * row_values;

  std::vector<int> ys;
  for (int y = 0; y + c.window_height <= image.height; y += c.stride_y) ys.push_back(y);
  std::vector<int> xs;
  for (int x = 0; x + c.window_width <= image.width; x += c.stride_x) xs.push_back(x);

  // Confidence per (row, column) so detections come out in row-major order.
  std::vector<float> conf(ys.size() * xs.size());
  nn::Tensor<float> heads({ys.size(), win_rows, per_window[1], per_window[2]});
  for (std::size_t ix = 0; ix < xs.size(); ++ix) {
    resample_window(image, {xs[ix], 0, c.window_width, image.height}, kPatchSize, image.height, strip.data());
    const auto features = net.infer_range(strip, 0, trunk.end);
    if (features.dim(2) != per_window[1] || features.dim(3) != per_window[2]) {
      throw std::logic_error("strip trunk width does not match the per-window trunk");
    }
    for (std::size_t iy = 0; iy < ys.size(); ++iy) {
      const std::size_t row = static_cast<std::size_t>(ys[iy]) / trunk.row_stride;
      std::memcpy(heads.data() + iy * slice, features.data() + row * row_values, slice * sizeof(float));
    }
    const auto out = net.infer_range(heads, trunk.end, net.size());
    for (std::size_t iy = 0; iy < ys.size(); ++iy) conf[iy * xs.size() + ix] = out[iy];
  }
  for (std::size_t iy = 0; iy < ys.size(); ++iy) {
    for (std::size_t ix = 0; ix < xs.size(); ++ix) {
      emit(result.detections, {xs[ix], ys[iy], c.window_width, c.window_height}, conf[iy * xs.size() + ix],
           c.confidence_threshold);
    }
  }
  result.windows_evaluated += ys.size() * xs.size();
}

}  // namespace

ScanResult sliding_window_scan(const RgbImage& image, const models::Net& classifier, const ScanConfig& config) {
  config.validate();
  if (!image.valid()) throw std::invalid_argument("invalid image");
  if (image.width < config.window_width || image.height < config.window_height) {
    throw std::invalid_argument("image " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                                " is smaller than the " + std::to_string(config.window_width) + "x" +
                                std::to_string(config.window_height) + " window");
  }
  if (classifier.output_shape() != nn::Shape{1}) throw std::invalid_argument("classifier must produce one output");

  ScanResult result;
  const auto trunk = shared_trunk(classifier);
  if (config.shared_strips && trunk && config.window_height == kPatchSize &&
      config.stride_y % static_cast<int>(trunk->row_stride) == 0) {
    scan_strips(image, classifier, config, *trunk, result);
  } else {
    scan_windows(image, classifier, config, result);
  }
  return result;
}

std::vector<Detection> nms(std::vector<Detection> detections, double iou_threshold) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return detections[a].confidence > detections[b].confidence; });
  std::vector<Detection> kept;
  for (std::size_t i : order) {
    const bool clear = std::none_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return iou(k.window, detections[i].window) > iou_threshold;
    });
    if (clear) kept.push_back(std::move(detections[i]));
  }
  return kept;
}

std::vector<Detection> refine_centers(const RgbImage& image, std::vector<Detection> detections,
                                      const models::Net& regressor) {
  if (detections.empty()) return detections;
  std::vector<Patch> patches;
  patches.reserve(detections.size());
  for (const auto& d : detections) patches.push_back(extract_patch(image, d.window));
  const auto raw = models::predict_centers(regressor, patches);
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const Window& w = detections[i].window;
    const double nx = std::clamp(raw[i].x, 0.0, 1.0);
    const double ny = std::clamp(raw[i].y, 0.0, 1.0);
    detections[i].center = PointF{w.x + nx * w.width, w.y + ny * w.height};
  }
  return detections;
}

long long count_kernels(std::size_t visible, double multiplier) {
  if (!(multiplier > 0.0)) throw std::invalid_argument("count multiplier must be positive");
  return static_cast<long long>(std::floor(static_cast<double>(visible) * multiplier + 1e-9));
}

long long count_kernels(const std::vector<Detection>& detections, double multiplier) {
  return count_kernels(detections.size(), multiplier);
}

CountReport detect_and_count(const RgbImage& image, const models::Net& classifier, const models::Net& regressor,
                             const ScanConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  auto scanned = sliding_window_scan(image, classifier, config);
  auto kept = nms(std::move(scanned.detections), config.nms_iou_threshold);
  CountReport report;
  report.detections = refine_centers(image, std::move(kept), regressor);
  report.visible_count = report.detections.size();
  report.estimated_total = count_kernels(report.visible_count, config.count_multiplier);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

nlohmann::json report_to_json(const CountReport& report, bool include_timing) {
  auto dets = nlohmann::json::array();
  for (const auto& d : report.detections) {
    nlohmann::json j{{"x", d.window.x},
                     {"y", d.window.y},
                     {"w", d.window.width},
                     {"h", d.window.height},
                     {"confidence", d.confidence}};
    if (d.center) {
      j["cx"] = d.center->x;
      j["cy"] = d.center->y;
    } else {
      j["cx"] = nullptr;
      j["cy"] = nullptr;
    }
    dets.push_back(std::move(j));
  }
  nlohmann::json out{{"detections", std::move(dets)},
                     {"visible_count", report.visible_count},
                     {"estimated_total", report.estimated_total}};
  if (include_timing) out["seconds"] = report.seconds;
  return out;
}

}  // namespace kc::detect
