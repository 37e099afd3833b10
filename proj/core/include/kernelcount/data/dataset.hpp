#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "kernelcount/data/geometry.hpp"
#include "kernelcount/data/patch.hpp"

namespace kc {

enum class Label { non_kernel = 0, kernel = 1 };

std::string_view to_string(Label label);
Label parse_label(std::string_view text);

/// One training patch. `center` is in patch pixels (0..kPatchSize) and only
/// kernels carry one.
struct PatchSample {
  Patch patch;
  Label label = Label::non_kernel;
  std::optional<PointF> center;
};

struct ManifestRecord {
  std::string path;
  Label label = Label::non_kernel;
  std::optional<PointF> center;
  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

/// Patch index: {"seed":S,"counts":{...},"samples":[{"path","label","center"?}]}.
struct Manifest {
  std::uint64_t seed = 0;
  std::vector<ManifestRecord> samples;

  std::size_t count(Label label) const;
  friend bool operator==(const Manifest&, const Manifest&) = default;
};

nlohmann::json manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const nlohmann::json& doc);
std::string manifest_dump(const Manifest& manifest);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

/// Loads every record's patch image (paths relative to `base_dir`), resizing
/// to kPatchSize if needed. Throws on unreadable paths, centers outside their
/// image, or centers on non-kernel records.
std::vector<PatchSample> load_samples(const Manifest& manifest, const std::filesystem::path& base_dir);

/// Writes every sample to `dir / record.path` as PNG plus `dir / manifest.json`.
void write_patch_dataset(const Manifest& manifest, const std::vector<PatchSample>& samples,
                         const std::filesystem::path& dir);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded split of n items; the test side gets round(n * test_fraction) items
/// (at least one and at most n - 1 when n >= 2). Both sides are sorted.
SplitIndices split_indices(std::size_t n, double test_fraction, std::uint64_t seed);

std::pair<Manifest, Manifest> split_dataset(const Manifest& manifest, double test_fraction, std::uint64_t seed);

template <typename T>
std::vector<T> select(const std::vector<T>& items, const std::vector<std::size_t>& indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(items.at(i));
  return out;
}

}  // namespace kc
