#include <gtest/gtest.h>

#include <cmath>

#include "kernelcount/detect/detector.hpp"
#include "kernelcount/nn/layers.hpp"
#include "oracles.hpp"

using namespace kc;
using detect::Detection;
using detect::ScanConfig;

namespace {

// Random running statistics so inference does not depend on training.
models::Net with_statistics(models::Net net, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (net.layer(i).kind() != nn::LayerKind::batchnorm) continue;
    auto& bn = static_cast<nn::BatchNorm<float>&>(net.layer(i));
    for (auto& v : bn.running_mean().values()) v = static_cast<float>(0.1 * rng.normal());
    for (auto& v : bn.running_var().values()) v = static_cast<float>(rng.uniform(0.5, 2.0));
    bn.mark_statistics();
  }
  return net;
}

RgbImage noise_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  RgbImage img(w, h);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

Detection det(int x, int y, int w, int h, float c) { return Detection{{x, y, w, h}, c, std::nullopt}; }

}  // namespace

TEST(Iou, Examples) {
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {0, 0, 10, 10}), 1.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {10, 0, 10, 10}), 0.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {5, 0, 10, 10}), 50.0 / 150.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {0, 0, 0, 10}), 0.0);
}

TEST(Scan, WindowCount) {
  EXPECT_EQ(detect::scan_window_count(1024, 768), 251u * 185u);
  EXPECT_EQ(detect::scan_window_count(22, 32), 1u);
  EXPECT_EQ(detect::scan_window_count(21, 32), 0u);
}

TEST(Scan, ConfigValidation) {
  ScanConfig c;
  EXPECT_NO_THROW(c.validate());
  c.confidence_threshold = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.nms_iou_threshold = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.count_multiplier = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.stride_x = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Scan, RejectsSmallImagesAndWrongHeads) {
  const auto cls = with_statistics(models::build_classifier(1), 2);
  EXPECT_THROW(detect::sliding_window_scan(RgbImage(20, 40), cls, {}), std::invalid_argument);
  EXPECT_THROW(detect::sliding_window_scan(RgbImage(40, 40), models::build_regressor(1), {}), std::invalid_argument);
}

TEST(Scan, ThresholdOneKeepsNothingAndCountsEveryWindow) {
  const auto cls = with_statistics(models::build_classifier(1), 2);
  ScanConfig c;
  c.confidence_threshold = 1.0;
  const auto r = detect::sliding_window_scan(noise_image(60, 50, 3), cls, c);
  EXPECT_TRUE(r.detections.empty());
  EXPECT_EQ(r.windows_evaluated, detect::scan_window_count(60, 50, c));
}

TEST(Scan, SharedStripsMatchPerWindowPath) {
  const auto cls = with_statistics(models::build_classifier(4), 5);
  const auto img = noise_image(70, 64, 6);
  ScanConfig c;
  c.confidence_threshold = 1e-6;
  c.stride_x = 3;
  c.stride_y = 2;
  const auto fast = detect::sliding_window_scan(img, cls, c);
  c.shared_strips = false;
  const auto slow = detect::sliding_window_scan(img, cls, c);
  ASSERT_EQ(fast.detections.size(), detect::scan_window_count(70, 64, c));
  ASSERT_EQ(fast.detections.size(), slow.detections.size());
  for (std::size_t i = 0; i < fast.detections.size(); ++i) {
    EXPECT_EQ(fast.detections[i].window, slow.detections[i].window);
    EXPECT_NEAR(fast.detections[i].confidence, slow.detections[i].confidence, 1e-4);
  }
}

TEST(Scan, PerWindowConfidenceMatchesClassifyPatch) {
  const auto cls = with_statistics(models::build_classifier(7), 8);
  const auto img = noise_image(30, 36, 9);
  ScanConfig c;
  c.confidence_threshold = 1e-6;
  const auto r = detect::sliding_window_scan(img, cls, c);
  ASSERT_FALSE(r.detections.empty());
  for (const auto& d : r.detections) {
    EXPECT_NEAR(d.confidence, models::classify_patch(cls, extract_patch(img, d.window)), 1e-4);
  }
}

TEST(Nms, Examples) {
  const auto kept = detect::nms({det(0, 0, 10, 10, 0.9f), det(1, 0, 10, 10, 0.8f), det(30, 30, 10, 10, 0.7f)}, 0.3);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].window.x, 0);
  EXPECT_EQ(kept[1].window.x, 30);
  // IoU of exactly the threshold does not suppress.
  const auto edge = detect::nms({det(0, 0, 10, 10, 0.9f), det(5, 0, 10, 10, 0.8f)}, 50.0 / 150.0);
  EXPECT_EQ(edge.size(), 2u);
  EXPECT_TRUE(detect::nms({}, 0.3).empty());
  EXPECT_EQ(detect::nms({det(0, 0, 10, 10, 0.9f), det(0, 0, 10, 10, 0.9f)}, 1.0).size(), 2u);
}

TEST(Nms, TiesKeepInputOrder) {
  const auto kept = detect::nms({det(0, 0, 10, 10, 0.6f), det(1, 0, 10, 10, 0.6f)}, 0.3);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].window.x, 0);
}

TEST(Nms, MatchesOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const auto boxes = kc::testing::random_detections(rng, 40);
    const double thr = 0.1 * static_cast<double>(rng.below(8));
    const auto kept = detect::nms(boxes, thr);
    const auto expected = kc::testing::nms_oracle(boxes, thr);
    ASSERT_EQ(kept.size(), expected.size()) << "trial " << trial;
    for (const auto& k : kept) {
      bool found = false;
      for (std::size_t i : expected) found |= boxes[i].window == k.window && boxes[i].confidence == k.confidence;
      ASSERT_TRUE(found) << "trial " << trial;
    }
    for (std::size_t i = 0; i < kept.size(); ++i)
      for (std::size_t j = i + 1; j < kept.size(); ++j) ASSERT_LE(iou(kept[i].window, kept[j].window), thr);
  }
}

TEST(Refine, MapsNormalizedCenterIntoWindow) {
  // A regressor whose last layer outputs a constant (0.5, 0.5).
  auto reg = models::build_regressor(1);
  auto& fc = reg.layer(reg.size() - 1);
  for (auto* p : fc.params()) {
    if (p->value.rank() == 1) p->value.fill(0.5f);
    else p->value.fill(0.0f);
  }
  const auto img = noise_image(60, 60, 2);
  auto out = detect::refine_centers(img, {det(10, 20, 22, 32, 0.9f)}, reg);
  ASSERT_TRUE(out[0].center);
  EXPECT_NEAR(out[0].center->x, 21.0, 1e-6);
  EXPECT_NEAR(out[0].center->y, 36.0, 1e-6);

  for (auto* p : fc.params()) {
    if (p->value.rank() == 1) {
      p->value[0] = 1.7f;
      p->value[1] = -0.4f;
    }
  }
  out = detect::refine_centers(img, {det(10, 20, 22, 32, 0.9f)}, reg);
  EXPECT_NEAR(out[0].center->x, 32.0, 1e-6);
  EXPECT_NEAR(out[0].center->y, 20.0, 1e-6);
  EXPECT_TRUE(detect::refine_centers(img, {}, reg).empty());
}

TEST(Count, Multiplier) {
  EXPECT_EQ(detect::count_kernels(100, 2.5), 250);
  EXPECT_EQ(detect::count_kernels(125, 2.5), 312);
  EXPECT_EQ(detect::count_kernels(0, 2.5), 0);
  EXPECT_EQ(detect::count_kernels(3, 1.0), 3);
  for (std::size_t v = 0; v < 500; ++v) ASSERT_LE(detect::count_kernels(v, 2.5), detect::count_kernels(v + 1, 2.5));
}

TEST(Report, JsonSchema) {
  detect::CountReport r;
  r.detections = {det(1, 2, 22, 32, 0.75f)};
  r.detections[0].center = PointF{12.0, 18.0};
  r.detections.push_back(det(40, 2, 22, 32, 0.6f));
  r.visible_count = 2;
  r.estimated_total = 5;
  r.seconds = 1.5;
  const auto j = detect::report_to_json(r);
  EXPECT_EQ(j["visible_count"], 2);
  EXPECT_EQ(j["estimated_total"], 5);
  EXPECT_DOUBLE_EQ(j["seconds"].get<double>(), 1.5);
  ASSERT_EQ(j["detections"].size(), 2u);
  EXPECT_EQ(j["detections"][0]["x"], 1);
  EXPECT_EQ(j["detections"][0]["h"], 32);
  EXPECT_DOUBLE_EQ(j["detections"][0]["cx"].get<double>(), 12.0);
  EXPECT_TRUE(j["detections"][1]["cx"].is_null());
  EXPECT_FALSE(detect::report_to_json(r, false).contains("seconds"));
}

TEST(Pipeline, DeterministicAndConsistent) {
  const auto cls = with_statistics(models::build_classifier(12), 13);
  const auto reg = models::build_regressor(14);
  const auto img = noise_image(80, 64, 15);
  ScanConfig c;
  c.confidence_threshold = 0.3;
  const auto a = detect::detect_and_count(img, cls, reg, c);
  const auto b = detect::detect_and_count(img, cls, reg, c);
  EXPECT_EQ(detect::report_to_json(a, false), detect::report_to_json(b, false));
  EXPECT_EQ(a.visible_count, a.detections.size());
  EXPECT_EQ(a.estimated_total, detect::count_kernels(a.visible_count, c.count_multiplier));
  for (const auto& d : a.detections) {
    ASSERT_TRUE(d.center);
    EXPECT_TRUE(d.window.contains(*d.center) || d.center->x == d.window.x + d.window.width ||
                d.center->y == d.window.y + d.window.height);
  }
}
