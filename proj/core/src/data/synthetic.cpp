#include "kernelcount/data/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>
#include <stdexcept>

#include "kernelcount/util/binary_io.hpp"
#include "kernelcount/util/random.hpp"

namespace kc {

using nlohmann::json;

std::string_view to_string(Background b) {
  switch (b) {
    case Background::uniform: return "uniform";
    case Background::noise: return "noise";
    case Background::stripes: return "stripes";
  }
  return "uniform";
}

Background parse_background(std::string_view text) {
  if (text == "uniform") return Background::uniform;
  if (text == "noise") return Background::noise;
  if (text == "stripes") return Background::stripes;
  throw std::invalid_argument("unknown background '" + std::string(text) + "'");
}

namespace {

using Color = std::array<double, 3>;

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

struct Kernel {
  double u, v;    // ear-local center
  double rx, ry;  // semi-axes
  Color color;
};

struct EarModel {
  EarSpec spec;
  PointF center;
  double cos_a, sin_a;
  double pitch_x, pitch_y;
  double half_w, half_h;  // cob half extents
  Color cob;
  std::vector<Kernel> kernels;  // row-major

  PointF to_image(double u, double v) const {
    return {center.x + u * cos_a - v * sin_a, center.y + u * sin_a + v * cos_a};
  }
  std::pair<double, double> to_local(double x, double y) const {
    const double dx = x - center.x, dy = y - center.y;
    return {dx * cos_a + dy * sin_a, -dx * sin_a + dy * cos_a};
  }
};

EarModel make_ear(const EarSpec& spec, const SceneParams& scene, Rng& rng) {
  if (spec.rows < 1 || spec.cols < 1) throw std::invalid_argument("ear needs at least one row and one column");
  if (!(spec.kernel_radius > 1.0)) throw std::invalid_argument("kernel radius must exceed 1 px");
  if (spec.gap < 0.0 || spec.jitter < 0.0) throw std::invalid_argument("gap and jitter must be non-negative");
  EarModel ear;
  ear.spec = spec;
  ear.center = spec.center.value_or(PointF{scene.width / 2.0, scene.height / 2.0});
  const double a = spec.angle_deg * std::numbers::pi / 180.0;
  ear.cos_a = std::cos(a);
  ear.sin_a = std::sin(a);
  const double ry = spec.kernel_radius, rx = ry * kKernelAspect;
  ear.pitch_x = 2.0 * rx + spec.gap;
  ear.pitch_y = 2.0 * ry + spec.gap;
  const double margin = spec.gap + 0.25 * ry;
  ear.half_w = spec.cols * ear.pitch_x / 2.0 + margin;
  ear.half_h = spec.rows * ear.pitch_y / 2.0 + margin;

  // Every kernel's crop (plus a few px of slack) must land inside the image.
  const double ex = spec.cols * ear.pitch_x / 2.0 + 1.4 * rx + spec.jitter + 4.0;
  const double ey = spec.rows * ear.pitch_y / 2.0 + 1.4 * ry + spec.jitter + 4.0;
  for (const double sx : {-1.0, 1.0}) {
    for (const double sy : {-1.0, 1.0}) {
      const PointF p = ear.to_image(sx * ex, sy * ey);
      if (p.x < 0 || p.y < 0 || p.x > scene.width || p.y > scene.height) {
        throw std::invalid_argument("a " + std::to_string(spec.rows) + "x" + std::to_string(spec.cols) +
                                    " ear with radius " + std::to_string(spec.kernel_radius) +
                                    " does not fit in the " + std::to_string(scene.width) + "x" +
                                    std::to_string(scene.height) + " image");
      }
    }
  }

  const double tone = rng.uniform(0.85, 1.1);
  ear.cob = {120.0 * tone, 70.0 * tone, 38.0 * tone};
  ear.kernels.reserve(static_cast<std::size_t>(spec.rows * spec.cols));
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      Kernel k;
      k.u = (c - (spec.cols - 1) / 2.0) * ear.pitch_x + rng.uniform(-spec.jitter, spec.jitter);
      k.v = (r - (spec.rows - 1) / 2.0) * ear.pitch_y + rng.uniform(-spec.jitter, spec.jitter);
      const double size = rng.uniform(0.96, 1.03);
      k.rx = rx * size;
      k.ry = ry * size;
      const double shade = rng.uniform(0.85, 1.05) * tone;
      k.color = {std::min(255.0, 238.0 * shade), std::min(255.0, rng.uniform(160.0, 200.0) * shade),
                 rng.uniform(25.0, 70.0) * shade};
      ear.kernels.push_back(k);
    }
  }
  return ear;
}

// Color of ear `ear` at image point (x, y), or nothing if the point is off the ear.
std::optional<Color> shade_ear(const EarModel& ear, double x, double y, double cob_noise) {
  const auto [u, v] = ear.to_local(x, y);
  const double cu = std::pow(std::abs(u) / ear.half_w, 4.0);
  const double cv = std::pow(std::abs(v) / ear.half_h, 4.0);
  const int rows = ear.spec.rows, cols = ear.spec.cols;
  const int ci = static_cast<int>(std::lround(u / ear.pitch_x + (cols - 1) / 2.0));
  const int ri = static_cast<int>(std::lround(v / ear.pitch_y + (rows - 1) / 2.0));
  const Kernel* best = nullptr;
  double best_d = 1e9, best_du = 0, best_dv = 0;
  for (int r = ri - 1; r <= ri + 1; ++r) {
    if (r < 0 || r >= rows) continue;
    for (int c = ci - 1; c <= ci + 1; ++c) {
      if (c < 0 || c >= cols) continue;
      const Kernel& k = ear.kernels[static_cast<std::size_t>(r * cols + c)];
      const double du = u - k.u, dv = v - k.v;
      const double d = std::sqrt((du / k.rx) * (du / k.rx) + (dv / k.ry) * (dv / k.ry));
      if (d < best_d) {
        best_d = d;
        best = &k;
        best_du = du / k.rx;
        best_dv = dv / k.ry;
      }
    }
  }
  const bool on_cob = cu + cv <= 1.0;
  Color gap = {ear.cob[0] * 0.55, ear.cob[1] * 0.5, ear.cob[2] * 0.5};
  Color cob = {ear.cob[0] + cob_noise, ear.cob[1] + cob_noise * 0.6, ear.cob[2] + cob_noise * 0.3};
  if (best && best_d < 1.0) {
    const double dome = 1.0 - 0.38 * best_d * best_d;
    const double hx = best_du + 0.3, hy = best_dv + 0.38;
    const double highlight = 0.45 * std::exp(-(hx * hx + hy * hy) / 0.08);
    const double edge = smoothstep(0.78, 1.0, best_d);
    Color out;
    for (int i = 0; i < 3; ++i) {
      const double lit = best->color[static_cast<std::size_t>(i)] * dome + 255.0 * highlight * 0.6;
      const double under = on_cob ? gap[static_cast<std::size_t>(i)] : gap[static_cast<std::size_t>(i)] * 0.8;
      out[static_cast<std::size_t>(i)] = lit * (1.0 - edge) + under * edge;
    }
    return out;
  }
  if (on_cob) {
    // Near a kernel the cob reads as the dark gap between kernels.
    const double t = best ? smoothstep(1.0, 1.25, best_d) : 1.0;
    Color out;
    for (int i = 0; i < 3; ++i) {
      out[static_cast<std::size_t>(i)] = gap[static_cast<std::size_t>(i)] * (1.0 - t) + cob[static_cast<std::size_t>(i)] * t;
    }
    return out;
  }
  return std::nullopt;
}

struct BackgroundModel {
  Background kind;
  Color base, alt;
  double stripe_cos, stripe_sin, stripe_period, stripe_phase;
  int grid_w, grid_h, cell;
  std::vector<double> grid;

  BackgroundModel(Background k, int width, int height, Rng& rng) : kind(k) {
    static constexpr std::array<Color, 5> palette = {
        Color{48, 78, 52}, Color{70, 72, 78}, Color{40, 58, 96}, Color{92, 96, 100}, Color{30, 34, 36}};
    base = palette[rng.below(palette.size())];
    alt = palette[rng.below(palette.size())];
    for (auto& a : alt) a = std::min(255.0, a * 1.6 + 20.0);
    const double theta = rng.uniform(0.0, std::numbers::pi);
    stripe_cos = std::cos(theta);
    stripe_sin = std::sin(theta);
    stripe_period = rng.uniform(18.0, 60.0);
    stripe_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    cell = 16;
    grid_w = width / cell + 2;
    grid_h = height / cell + 2;
    grid.resize(static_cast<std::size_t>(grid_w * grid_h));
    for (auto& g : grid) g = rng.uniform(-1.0, 1.0);
  }

  Color at(double x, double y) const {
    switch (kind) {
      case Background::uniform:
        return base;
      case Background::stripes: {
        const double s = 0.5 + 0.5 * std::sin((x * stripe_cos + y * stripe_sin) * 2.0 * std::numbers::pi / stripe_period +
                                              stripe_phase);
        return {base[0] * (1 - s) + alt[0] * s, base[1] * (1 - s) + alt[1] * s, base[2] * (1 - s) + alt[2] * s};
      }
      case Background::noise: {
        const double gx = x / cell, gy = y / cell;
        const int x0 = static_cast<int>(gx), y0 = static_cast<int>(gy);
        const double fx = gx - x0, fy = gy - y0;
        auto g = [&](int i, int j) { return grid[static_cast<std::size_t>(j * grid_w + i)]; };
        const double n = (g(x0, y0) * (1 - fx) + g(x0 + 1, y0) * fx) * (1 - fy) +
                         (g(x0, y0 + 1) * (1 - fx) + g(x0 + 1, y0 + 1) * fx) * fy;
        const double f = 1.0 + 0.35 * n;
        return {base[0] * f, base[1] * f, base[2] * f};
      }
    }
    return base;
  }
};

}  // namespace

SyntheticEarTruth generate_synthetic_scene(const SceneParams& params, std::uint64_t seed) {
  if (params.width <= 0 || params.height <= 0) throw std::invalid_argument("image dimensions must be positive");
  if (params.ears.empty()) throw std::invalid_argument("scene needs at least one ear");
  if (!(params.hidden_ratio > 0.0)) throw std::invalid_argument("hidden ratio must be positive");

  Rng master(seed);
  // Independent streams so that, e.g., changing an ear's angle never changes its jitter draws.
  Rng ear_rng(master.fork());
  Rng bg_rng(master.fork());
  Rng light_rng(master.fork());
  Rng noise_rng(master.fork());

  std::vector<EarModel> ears;
  ears.reserve(params.ears.size());
  for (const auto& spec : params.ears) ears.push_back(make_ear(spec, params, ear_rng));

  SyntheticEarTruth truth;
  truth.seed = seed;
  truth.hidden_ratio = params.hidden_ratio;
  double radius_sum = 0.0;
  for (const auto& ear : ears) {
    for (const auto& k : ear.kernels) truth.centers.push_back(ear.to_image(k.u, k.v));
    radius_sum += ear.spec.kernel_radius;
  }
  truth.kernel_radius = radius_sum / static_cast<double>(ears.size());
  truth.visible_count = static_cast<int>(truth.centers.size());

  const BackgroundModel bg(params.background, params.width, params.height, bg_rng);
  const double light_theta = light_rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double lcos = std::cos(light_theta), lsin = std::sin(light_theta);
  const double half_diag = 0.5 * std::hypot(params.width, params.height);

  truth.image = RgbImage(params.width, params.height);
  for (int py = 0; py < params.height; ++py) {
    for (int px = 0; px < params.width; ++px) {
      const double x = px + 0.5, y = py + 0.5;
      const double cob_noise = noise_rng.uniform(-10.0, 10.0);
      std::optional<Color> c;
      for (const auto& ear : ears) {
        c = shade_ear(ear, x, y, cob_noise);
        if (c) break;
      }
      const Color color = c.value_or(bg.at(x, y));
      const double proj = ((x - params.width / 2.0) * lcos + (y - params.height / 2.0) * lsin) / half_diag;
      const double light = std::clamp(1.0 + params.lighting_gradient * proj, 0.2, 1.8);
      std::uint8_t* dst = truth.image.at(px, py);
      for (int i = 0; i < 3; ++i) {
        const double v = color[static_cast<std::size_t>(i)] * light + noise_rng.uniform(-4.0, 4.0);
        dst[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return truth;
}

SyntheticEarTruth generate_synthetic_ear(const SyntheticEarParams& p, std::uint64_t seed) {
  SceneParams scene;
  scene.width = p.width;
  scene.height = p.height;
  scene.lighting_gradient = p.lighting_gradient;
  scene.background = p.background;
  scene.hidden_ratio = p.hidden_ratio;
  EarSpec ear;
  ear.rows = p.rows;
  ear.cols = p.cols;
  ear.kernel_radius = p.kernel_radius;
  ear.gap = p.gap;
  ear.jitter = p.jitter;
  ear.angle_deg = p.angle_deg;
  scene.ears = {ear};
  return generate_synthetic_scene(scene, seed);
}

std::vector<SuiteEntry> ear_suite(const EarSuiteOptions& o, std::uint64_t seed) {
  if (o.rows_min < 1 || o.rows_max < o.rows_min || o.cols_min < 1 || o.cols_max < o.cols_min) {
    throw std::invalid_argument("invalid ear suite grid ranges");
  }
  Rng rng(seed);
  std::vector<SuiteEntry> out;
  out.reserve(o.count);
  for (std::size_t i = 0; i < o.count; ++i) {
    SuiteEntry e;
    auto& p = e.params;
    p.width = o.width;
    p.height = o.height;
    p.hidden_ratio = o.hidden_ratio;
    p.rows = o.rows_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(o.rows_max - o.rows_min + 1)));
    p.cols = o.cols_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(o.cols_max - o.cols_min + 1)));
    p.jitter = rng.uniform(0.0, o.max_jitter);
    p.lighting_gradient = rng.uniform(0.0, o.max_lighting);
    p.angle_deg = rng.uniform(-o.max_angle_deg, o.max_angle_deg);
    p.background = static_cast<Background>(rng.below(3));
    e.seed = rng.fork();
    out.push_back(e);
  }
  return out;
}

std::vector<SyntheticEarTruth> generate_ear_suite(const EarSuiteOptions& options, std::uint64_t seed) {
  std::vector<SyntheticEarTruth> truths;
  for (const auto& e : ear_suite(options, seed)) truths.push_back(generate_synthetic_ear(e.params, e.seed));
  return truths;
}

json truth_to_json(const SyntheticEarTruth& truth) {
  json centers = json::array();
  for (const auto& c : truth.centers) centers.push_back({c.x, c.y});
  return {{"centers", std::move(centers)},
          {"visible_count", truth.visible_count},
          {"hidden_ratio", truth.hidden_ratio},
          {"seed", truth.seed},
          {"kernel_radius", truth.kernel_radius}};
}

SyntheticEarTruth truth_from_json(const json& doc) {
  SyntheticEarTruth t;
  try {
    for (const auto& c : doc.at("centers")) t.centers.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    t.visible_count = doc.at("visible_count").get<int>();
    t.hidden_ratio = doc.at("hidden_ratio").get<double>();
    t.seed = doc.at("seed").get<std::uint64_t>();
    t.kernel_radius = doc.value("kernel_radius", kDefaultKernelRadius);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed truth sidecar: ") + e.what());
  }
  if (t.visible_count != static_cast<int>(t.centers.size())) {
    throw std::invalid_argument("truth sidecar visible_count does not match its center list");
  }
  return t;
}

std::filesystem::path truth_sidecar_path(const std::filesystem::path& image_path) {
  return std::filesystem::path(image_path.string() + ".truth.json");
}

void write_truth(const SyntheticEarTruth& truth, const std::filesystem::path& image_path) {
  write_image(truth.image, image_path);
  io::write_text(truth_sidecar_path(image_path), truth_to_json(truth).dump() + "\n");
}

SyntheticEarTruth read_truth(const std::filesystem::path& image_path) {
  const auto sidecar = truth_sidecar_path(image_path);
  json doc;
  try {
    doc = json::parse(io::read_text(sidecar));
  } catch (const json::exception& e) {
    throw std::invalid_argument(sidecar.string() + ": " + e.what());
  }
  SyntheticEarTruth t = truth_from_json(doc);
  t.image = read_image(image_path);
  return t;
}

// ---------------------------------------------------------------------------

Window kernel_box(const PointF& center, double kernel_radius, double crop_scale) {
  const int h = static_cast<int>(std::lround(2.0 * crop_scale * kernel_radius));
  const int w = static_cast<int>(std::lround(2.0 * crop_scale * kernel_radius * kKernelAspect));
  return {static_cast<int>(std::lround(center.x - w / 2.0)), static_cast<int>(std::lround(center.y - h / 2.0)), w, h};
}

namespace {

int centers_inside(const Window& box, const std::vector<PointF>& centers) {
  int n = 0;
  for (const auto& c : centers) n += box.contains(c) ? 1 : 0;
  return n;
}

}  // namespace

PatchDataset build_patch_dataset(const std::vector<SyntheticEarTruth>& truths, std::size_t negatives_per_image,
                                 std::uint64_t seed, const PatchOptions& options) {
  if (truths.empty()) throw std::invalid_argument("build_patch_dataset needs at least one image");
  Rng rng(seed);
  PatchDataset out;
  out.manifest.seed = seed;
  auto add = [&](PatchSample s, const Window& w, std::size_t source) {
    char name[32];
    std::snprintf(name, sizeof name, "patches/%06zu.png", out.samples.size());
    out.manifest.samples.push_back({name, s.label, s.center});
    out.samples.push_back(std::move(s));
    out.windows.push_back(w);
    out.sources.push_back(source);
  };

  for (std::size_t t = 0; t < truths.size(); ++t) {
    const auto& truth = truths[t];
    const RgbImage& img = truth.image;
    const int j = options.position_jitter;

    for (const auto& c : truth.centers) {
      const int dx = j > 0 ? static_cast<int>(rng.below(static_cast<std::size_t>(2 * j + 1))) - j : 0;
      const int dy = j > 0 ? static_cast<int>(rng.below(static_cast<std::size_t>(2 * j + 1))) - j : 0;
      Window box = kernel_box(c, truth.kernel_radius, options.crop_scale);
      box.x += dx;
      box.y += dy;
      if (!box.inside(img.width, img.height) || centers_inside(box, truth.centers) != 1) continue;
      PatchSample s;
      s.patch = extract_patch(img, box);
      s.label = Label::kernel;
      s.center = PointF{(c.x - box.x) * kPatchSize / box.width, (c.y - box.y) * kPatchSize / box.height};
      add(std::move(s), box, t);
    }

    std::vector<Window> kernel_boxes;
    kernel_boxes.reserve(truth.centers.size());
    for (const auto& c : truth.centers) kernel_boxes.push_back(kernel_box(c, truth.kernel_radius, options.crop_scale));
    const Window nominal = kernel_box({0, 0}, truth.kernel_radius, options.crop_scale);
    if (nominal.width > img.width || nominal.height > img.height) {
      throw std::invalid_argument("crop box larger than image " + std::to_string(t));
    }
    std::size_t placed = 0, attempts = 0;
    const std::size_t max_attempts = std::max<std::size_t>(1, negatives_per_image) * options.attempts_per_negative;
    while (placed < negatives_per_image) {
      if (++attempts > max_attempts) {
        throw std::runtime_error("could only place " + std::to_string(placed) + " of " +
                                 std::to_string(negatives_per_image) + " negatives in image " + std::to_string(t) +
                                 " after " + std::to_string(max_attempts) + " attempts");
      }
      Window box = nominal;
      box.x = static_cast<int>(rng.below(static_cast<std::size_t>(img.width - box.width + 1)));
      box.y = static_cast<int>(rng.below(static_cast<std::size_t>(img.height - box.height + 1)));
      const bool crowded = centers_inside(box, truth.centers) >= options.negative_min_centers;
      bool clear = true;
      if (!crowded) {
        for (const auto& kb : kernel_boxes) {
          if (iou(box, kb) >= options.negative_max_iou) {
            clear = false;
            break;
          }
        }
      }
      if (!crowded && !clear) continue;
      PatchSample s;
      s.patch = extract_patch(img, box);
      s.label = Label::non_kernel;
      add(std::move(s), box, t);
      ++placed;
    }
  }
  return out;
}

}  // namespace kc
