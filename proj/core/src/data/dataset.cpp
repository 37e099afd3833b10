#include "kernelcount/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "kernelcount/util/binary_io.hpp"
#include "kernelcount/util/random.hpp"

namespace kc {

using nlohmann::json;

std::string_view to_string(Label label) { return label == Label::kernel ? "kernel" : "non_kernel"; }

Label parse_label(std::string_view text) {
  if (text == "kernel") return Label::kernel;
  if (text == "non_kernel") return Label::non_kernel;
  throw std::invalid_argument("unknown label '" + std::string(text) + "'");
}

std::size_t Manifest::count(Label label) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [&](const ManifestRecord& r) { return r.label == label; }));
}

json manifest_to_json(const Manifest& manifest) {
  json samples = json::array();
  for (const auto& r : manifest.samples) {
    json rec = {{"path", r.path}, {"label", to_string(r.label)}};
    if (r.center) rec["center"] = {r.center->x, r.center->y};
    samples.push_back(std::move(rec));
  }
  return {{"seed", manifest.seed},
          {"counts", {{"kernel", manifest.count(Label::kernel)}, {"non_kernel", manifest.count(Label::non_kernel)}}},
          {"samples", std::move(samples)}};
}

Manifest manifest_from_json(const json& doc) {
  Manifest m;
  try {
    m.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& rec : doc.at("samples")) {
      ManifestRecord r;
      r.path = rec.at("path").get<std::string>();
      r.label = parse_label(rec.at("label").get<std::string>());
      if (rec.contains("center") && !rec["center"].is_null()) {
        const auto& c = rec["center"];
        if (!c.is_array() || c.size() != 2) throw std::invalid_argument("center must be [x, y]");
        r.center = PointF{c[0].get<double>(), c[1].get<double>()};
        if (r.label != Label::kernel) throw std::invalid_argument("center on a non_kernel record: " + r.path);
      }
      m.samples.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::string manifest_dump(const Manifest& manifest) { return manifest_to_json(manifest).dump(1) + "\n"; }

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  io::write_text(path, manifest_dump(manifest));
}

Manifest read_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  return manifest_from_json(doc);
}

std::vector<PatchSample> load_samples(const Manifest& manifest, const std::filesystem::path& base_dir) {
  std::vector<PatchSample> out;
  out.reserve(manifest.samples.size());
  for (const auto& r : manifest.samples) {
    const auto path = base_dir / r.path;
    if (!std::filesystem::exists(path)) throw std::runtime_error("manifest path not found: " + path.string());
    const RgbImage img = read_image(path);
    PatchSample s;
    s.label = r.label;
    if (r.center) {
      if (r.label != Label::kernel) throw std::invalid_argument("center on a non_kernel record: " + r.path);
      const PointF c = *r.center;
      if (!(c.x >= 0 && c.y >= 0 && c.x <= img.width && c.y <= img.height)) {
        throw std::invalid_argument("center (" + std::to_string(c.x) + ", " + std::to_string(c.y) + ") outside " +
                                    r.path);
      }
      s.center = PointF{c.x * kPatchSize / img.width, c.y * kPatchSize / img.height};
    }
    s.patch = extract_patch(img, {0, 0, img.width, img.height});
    out.push_back(std::move(s));
  }
  return out;
}

void write_patch_dataset(const Manifest& manifest, const std::vector<PatchSample>& samples,
                         const std::filesystem::path& dir) {
  if (manifest.samples.size() != samples.size()) throw std::invalid_argument("manifest/sample count mismatch");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto path = dir / manifest.samples[i].path;
    std::filesystem::create_directories(path.parent_path());
    write_image(tensor_to_image(samples[i].patch), path);
  }
  write_manifest(manifest, dir / "manifest.json");
}

SplitIndices split_indices(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("cannot split an empty dataset");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw std::invalid_argument("test fraction must be in (0, 1)");
  auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  if (n >= 2) n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
  Rng rng(seed);
  const auto order = permutation(n, rng);
  SplitIndices s;
  s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

std::pair<Manifest, Manifest> split_dataset(const Manifest& manifest, double test_fraction, std::uint64_t seed) {
  const auto idx = split_indices(manifest.samples.size(), test_fraction, seed);
  Manifest train{manifest.seed, select(manifest.samples, idx.train)};
  Manifest test{manifest.seed, select(manifest.samples, idx.test)};
  return {std::move(train), std::move(test)};
}

}  // namespace kc
