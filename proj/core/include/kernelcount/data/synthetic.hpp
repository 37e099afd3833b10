#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "kernelcount/data/dataset.hpp"
#include "kernelcount/data/geometry.hpp"
#include "kernelcount/data/image.hpp"

namespace kc {

enum class Background { uniform, noise, stripes };

std::string_view to_string(Background b);
Background parse_background(std::string_view text);

/// Kernels are ellipses whose horizontal semi-axis is this fraction of the
/// vertical one, i.e. the 22:32 shape of the scan window.
inline constexpr double kKernelAspect = 22.0 / 32.0;
/// Vertical kernel semi-axis for which a 1.4x-radius crop is exactly 32 px tall.
inline constexpr double kDefaultKernelRadius = 80.0 / 7.0;

/// One ear: a rows x cols grid of kernels on a cob, rotated about its center.
struct EarSpec {
  int rows = 24;
  int cols = 12;
  double kernel_radius = kDefaultKernelRadius;  // vertical semi-axis, px
  double gap = 1.5;                             // px between neighbouring kernels
  double jitter = 0.0;                          // max per-kernel center offset, px
  double angle_deg = 0.0;                       // rotation in image coordinates (x right, y down)
  std::optional<PointF> center;                 // defaults to the image center
};

struct SceneParams {
  int width = 1024;
  int height = 768;
  std::vector<EarSpec> ears{EarSpec{}};
  double lighting_gradient = 0.0;  // peak relative brightness change across the image
  Background background = Background::uniform;
  double hidden_ratio = 2.5;       // whole-ear count / visible count
};

struct SyntheticEarTruth {
  RgbImage image;
  std::vector<PointF> centers;
  int visible_count = 0;
  double hidden_ratio = 2.5;
  std::uint64_t seed = 0;
  double kernel_radius = kDefaultKernelRadius;  // mean over ears
};

/// Renders a scene with exact kernel centers. Throws std::invalid_argument if
/// an ear (plus room for a crop around every kernel) does not fit in the image.
SyntheticEarTruth generate_synthetic_scene(const SceneParams& params, std::uint64_t seed);

struct SyntheticEarParams {
  int rows = 24;
  int cols = 12;
  double kernel_radius = kDefaultKernelRadius;
  double gap = 1.5;
  double jitter = 0.0;
  double lighting_gradient = 0.0;
  Background background = Background::uniform;
  double angle_deg = 0.0;
  int width = 1024;
  int height = 768;
  double hidden_ratio = 2.5;
};

SyntheticEarTruth generate_synthetic_ear(const SyntheticEarParams& params, std::uint64_t seed);

/// Ranges for a varied set of single-ear images. Every ear draws its grid
/// size, jitter, lighting, angle and background uniformly from these.
struct EarSuiteOptions {
  std::size_t count = 20;
  int width = 1024;
  int height = 768;
  int rows_min = 16, rows_max = 24;
  int cols_min = 8, cols_max = 12;
  double max_jitter = 1.5;
  double max_lighting = 0.4;
  double max_angle_deg = 15.0;
  double hidden_ratio = 2.5;
};

struct SuiteEntry {
  SyntheticEarParams params;
  std::uint64_t seed = 0;
};

std::vector<SuiteEntry> ear_suite(const EarSuiteOptions& options, std::uint64_t seed);
std::vector<SyntheticEarTruth> generate_ear_suite(const EarSuiteOptions& options, std::uint64_t seed);

/// Sidecar `<image>.truth.json`: centers, visible_count, hidden_ratio, seed, kernel_radius.
nlohmann::json truth_to_json(const SyntheticEarTruth& truth);
/// Fills every field but the image.
SyntheticEarTruth truth_from_json(const nlohmann::json& doc);
std::filesystem::path truth_sidecar_path(const std::filesystem::path& image_path);
void write_truth(const SyntheticEarTruth& truth, const std::filesystem::path& image_path);
/// Reads the image and its sidecar.
SyntheticEarTruth read_truth(const std::filesystem::path& image_path);

struct PatchOptions {
  double crop_scale = 1.4;        // crop half-extent in kernel radii
  int position_jitter = 3;        // max positive-crop offset from the kernel center, px
  double negative_max_iou = 0.2;  // negatives overlap every kernel box less than this...
  int negative_min_centers = 2;   // ...or contain at least this many centers
  std::size_t attempts_per_negative = 400;
};

struct PatchDataset {
  Manifest manifest;
  std::vector<PatchSample> samples;  // parallel to manifest.samples
  std::vector<Window> windows;       // crop of each sample in its source image
  std::vector<std::size_t> sources;  // index of each sample's source image
};

/// Crop box of the given kernel radius centered on `center` (not clamped).
Window kernel_box(const PointF& center, double kernel_radius, double crop_scale = 1.4);

/// Positives: one crop around each ground-truth center (skipped if the crop
/// leaves the image or holds another center). Negatives: random crops that
/// overlap no kernel box by `negative_max_iou` or hold two or more centers.
PatchDataset build_patch_dataset(const std::vector<SyntheticEarTruth>& truths, std::size_t negatives_per_image,
                                 std::uint64_t seed, const PatchOptions& options = {});

}  // namespace kc
