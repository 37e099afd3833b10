#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <nlohmann/json.hpp>

#include "kernelcount/data/augment.hpp"
#include "kernelcount/data/dataset.hpp"
#include "kernelcount/util/random.hpp"

using namespace kc;

namespace {

PatchSample ramp_sample() {
  PatchSample s;
  s.patch = Patch({32, 32, 3});
  for (std::size_t i = 0; i < s.patch.size(); ++i) s.patch[i] = static_cast<float>(i % 97) / 96.0f;
  s.label = Label::kernel;
  s.center = PointF{0.3 * 32, 0.25 * 32};
  return s;
}

}  // namespace

TEST(Labels, TextForm) {
  EXPECT_EQ(to_string(Label::kernel), "kernel");
  EXPECT_EQ(parse_label("non_kernel"), Label::non_kernel);
  EXPECT_THROW(parse_label("maybe"), std::invalid_argument);
}

TEST(Manifest, JsonRoundTrip) {
  Manifest m;
  m.seed = 17;
  m.samples = {{"patches/000000.png", Label::kernel, PointF{12.5, 16.0}}, {"patches/000001.png", Label::non_kernel, {}}};
  const auto j = manifest_to_json(m);
  EXPECT_EQ(j["counts"]["kernel"], 1);
  EXPECT_EQ(j["samples"][0]["center"][0], 12.5);
  EXPECT_FALSE(j["samples"][1].contains("center"));
  EXPECT_EQ(manifest_from_json(j), m);
}

TEST(Manifest, CenterOnNegativeRejected) {
  nlohmann::json j = {{"seed", 1}, {"samples", {{{"path", "a.png"}, {"label", "non_kernel"}, {"center", {1, 2}}}}}};
  EXPECT_THROW(manifest_from_json(j), std::invalid_argument);
}

TEST(Manifest, LoadValidatesPathsAndCenters) {
  const auto dir = std::filesystem::temp_directory_path() / "kc_manifest_test";
  std::filesystem::remove_all(dir);
  Manifest m;
  m.samples = {{"p/a.png", Label::kernel, PointF{16, 16}}};
  write_patch_dataset(m, {ramp_sample()}, dir);
  const auto back = read_manifest(dir / "manifest.json");
  EXPECT_EQ(back, m);
  const auto samples = load_samples(back, dir);
  ASSERT_EQ(samples.size(), 1u);
  EXPECT_EQ(samples[0].patch.shape(), (nn::Shape{32, 32, 3}));

  auto outside = m;
  outside.samples[0].center = PointF{40, 3};
  EXPECT_THROW(load_samples(outside, dir), std::invalid_argument);
  auto missing = m;
  missing.samples[0].path = "p/none.png";
  EXPECT_THROW(load_samples(missing, dir), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST(Split, ClassifierCorpusCounts) {
  const auto s = split_indices(16391, 0.2, 1);
  EXPECT_EQ(s.test.size(), 3278u);
  EXPECT_EQ(s.train.size(), 13113u);
}

TEST(Split, RegressorCorpusCounts) {
  const auto s = split_indices(6978, 0.2, 1);
  EXPECT_EQ(s.test.size(), 1396u);
  EXPECT_EQ(s.train.size(), 5582u);
}

TEST(Split, SeededAndDisjoint) {
  const auto a = split_indices(100, 0.3, 5), b = split_indices(100, 0.3, 5), c = split_indices(100, 0.3, 6);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.test, c.test);
  std::vector<std::size_t> all = a.train;
  all.insert(all.end(), a.test.begin(), a.test.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(all[i], i);
}

TEST(Split, Errors) {
  EXPECT_THROW(split_indices(0, 0.2, 1), std::invalid_argument);
  EXPECT_THROW(split_indices(10, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(split_indices(10, 1.0, 1), std::invalid_argument);
  Manifest empty;
  EXPECT_THROW(split_dataset(empty, 0.2, 1), std::invalid_argument);
}

TEST(Split, ManifestSides) {
  Manifest m;
  for (int i = 0; i < 10; ++i) m.samples.push_back({"p" + std::to_string(i), Label::non_kernel, {}});
  const auto [train, test] = split_dataset(m, 0.2, 3);
  EXPECT_EQ(train.samples.size(), 8u);
  EXPECT_EQ(test.samples.size(), 2u);
}

TEST(Augment, SeventyPercentCopies) {
  // 13,113 training patches plus copies of ~70% of them gives 22,292.
  EXPECT_EQ(13113 + augmented_copies(13113, 0.7), 22292u);
}

TEST(Augment, HorizontalFlipIsAnInvolution) {
  const auto s = ramp_sample();
  const auto twice = flip_horizontal(flip_horizontal(s));
  EXPECT_EQ(twice.patch, s.patch);
  EXPECT_NEAR(twice.center->x, s.center->x, 1e-12);
  EXPECT_EQ(twice.center->y, s.center->y);
  const auto v = flip_vertical(flip_vertical(s));
  EXPECT_EQ(v.patch, s.patch);
  EXPECT_NEAR(v.center->y, s.center->y, 1e-12);
}

TEST(Augment, FlipMirrorsCenter) {
  const auto f = flip_horizontal(ramp_sample());
  EXPECT_NEAR(f.center->x / 32.0, 0.7, 1e-12);
  EXPECT_NEAR(f.center->y / 32.0, 0.25, 1e-12);
  EXPECT_EQ(f.label, Label::kernel);
  const auto v = flip_vertical(ramp_sample());
  EXPECT_NEAR(v.center->y / 32.0, 0.75, 1e-12);
  // Pixel (x, y) moves to (31 - x, y).
  EXPECT_EQ(f.patch[(5 * 32 + 31) * 3 + 1], ramp_sample().patch[(5 * 32 + 0) * 3 + 1]);
}

TEST(Augment, UnitJitterIsIdentity) {
  const auto s = ramp_sample();
  EXPECT_EQ(color_jitter(s, {1.0f, 1.0f, 1.0f}).patch, s.patch);
  const auto bright = color_jitter(s, {1.2f, 1.2f, 1.2f});
  for (float v : bright.patch.values()) ASSERT_LE(v, 1.0f);
}

TEST(Augment, TrainingSetKeepsOriginalsFirst) {
  std::vector<PatchSample> base(10, ramp_sample());
  const auto out = augment_training_set(base, 0.7, 3);
  ASSERT_EQ(out.size(), 17u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(out[i].patch, base[i].patch);
  for (const auto& s : out) EXPECT_EQ(s.label, Label::kernel);
  EXPECT_EQ(augment_training_set(base, 0.0, 3).size(), 10u);
}
