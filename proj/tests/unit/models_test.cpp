#include <gtest/gtest.h>

#include "kernelcount/models/models.hpp"
#include "kernelcount/models/train.hpp"
#include "kernelcount/nn/init.hpp"
#include "kernelcount/nn/layers.hpp"
#include "kernelcount/util/random.hpp"

using namespace kc;
using models::ArchitectureRow;
using nn::Shape;

TEST(Architecture, ClassifierTable) {
  const std::vector<ArchitectureRow> expected{
      {"Conv/s1", 3, 32, {30, 30, 32}}, {"Conv/s1", 3, 32, {28, 28, 32}}, {"Avg pool/s2", 2, 0, {14, 14, 32}},
      {"Conv/s1", 3, 64, {12, 12, 64}}, {"Conv/s1", 3, 64, {10, 10, 64}}, {"Conv/s1", 3, 64, {8, 8, 64}},
      {"Avg pool/s1", 7, 0, {2, 2, 64}}, {"FC-256", 0, 256, {256}},       {"FC-128", 0, 128, {128}},
      {"Sigmoid", 0, 1, {1}}};
  EXPECT_EQ(models::describe_architecture(models::build_classifier(0)), expected);
}

TEST(Architecture, RegressorTable) {
  const std::vector<ArchitectureRow> expected{
      {"Conv/s1", 3, 32, {30, 30, 32}}, {"Conv/s1", 3, 32, {28, 28, 32}}, {"Max pool/s2", 2, 0, {14, 14, 32}},
      {"Conv/s1", 3, 64, {12, 12, 64}}, {"Conv/s1", 3, 64, {10, 10, 64}}, {"Conv/s1", 3, 64, {8, 8, 64}},
      {"Max pool/s2", 2, 0, {4, 4, 64}}, {"FC-100", 0, 100, {100}},       {"FC-50", 0, 50, {50}},
      {"FC-10", 0, 10, {10}},           {"FC-2", 0, 2, {2}}};
  EXPECT_EQ(models::describe_architecture(models::build_regressor(0)), expected);
}

TEST(Architecture, ClassifierNormalizesEveryHiddenLayer) {
  const auto net = models::build_classifier(0);
  std::size_t bn = 0, relu = 0;
  for (std::size_t i = 0; i < net.size(); ++i) {
    bn += net.layer(i).kind() == nn::LayerKind::batchnorm;
    relu += net.layer(i).kind() == nn::LayerKind::relu;
  }
  EXPECT_EQ(bn, 7u);
  EXPECT_EQ(relu, 7u);
  EXPECT_EQ(net.layer(net.size() - 1).kind(), nn::LayerKind::sigmoid);
}

TEST(Architecture, SameSeedSameWeights) {
  auto a = models::build_classifier(9), b = models::build_classifier(9);
  EXPECT_EQ(a.params()[0]->value, b.params()[0]->value);
  auto c = models::build_classifier(10);
  EXPECT_NE(a.params()[0]->value, c.params()[0]->value);
}

TEST(Architecture, XavierBounds) {
  auto net = models::build_regressor(3);
  for (auto* p : net.params()) {
    if (p->value.rank() < 2) {
      for (float v : p->value.values()) EXPECT_EQ(v, 0.0f) << p->name;
      continue;
    }
    const auto [fi, fo] = nn::fan_in_out(p->value.shape());
    const double bound = nn::xavier_bound(fi, fo);
    for (float v : p->value.values()) ASSERT_LE(std::abs(v), bound) << p->name;
  }
}

namespace {

// Two trivially separable patch classes: bright vs dark with a few noisy pixels.
std::vector<PatchSample> toy_patches(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<PatchSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    PatchSample s;
    const bool pos = i % 2 == 0;
    s.patch = Patch({32, 32, 3}, pos ? 0.8f : 0.2f);
    for (int k = 0; k < 20; ++k) s.patch[rng.below(s.patch.size())] = static_cast<float>(rng.uniform());
    s.label = pos ? Label::kernel : Label::non_kernel;
    if (pos) s.center = PointF{8.0 + rng.uniform(0, 16), 8.0 + rng.uniform(0, 16)};
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST(Training, ClassifierLearnsToySet) {
  const auto data = toy_patches(80, 1);
  models::TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.iterations = 60;
  cfg.log_every = 20;
  cfg.eval_every = 20;
  cfg.seed = 4;
  const auto r = models::train_classifier(data, cfg);
  ASSERT_EQ(r.history.size(), 3u);
  EXPECT_LT(r.history.back().train_loss, r.history.front().train_loss);
  const auto test = select(data, r.split.test);
  const auto pred = models::classify_samples(r.net, test);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < test.size(); ++i) ok += pred[i] == test[i].label;
  EXPECT_EQ(ok, test.size());
}

TEST(Training, SameSeedIsBitIdentical) {
  const auto data = toy_patches(40, 2);
  models::TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.iterations = 5;
  cfg.seed = 11;
  auto a = models::train_classifier(data, cfg);
  auto b = models::train_classifier(data, cfg);
  for (std::size_t i = 0; i < a.net.params().size(); ++i) {
    ASSERT_EQ(a.net.params()[i]->value, b.net.params()[i]->value);
  }
  EXPECT_EQ(models::history_to_csv(a.history), models::history_to_csv(b.history));
}

TEST(Training, RegressorRejectsMissingCenters) {
  auto data = toy_patches(10, 3);
  models::TrainConfig cfg = models::TrainConfig::regressor_defaults();
  cfg.iterations = 1;
  EXPECT_THROW(models::train_regressor(data, cfg), std::invalid_argument);
}

TEST(Training, RegressorReducesLoss) {
  auto data = toy_patches(60, 4);
  std::vector<PatchSample> kernels;
  for (auto& s : data) {
    if (s.label == Label::kernel) kernels.push_back(s);
  }
  models::TrainConfig cfg = models::TrainConfig::regressor_defaults();
  cfg.iterations = 60;
  cfg.log_every = 20;
  cfg.seed = 5;
  const auto r = models::train_regressor(kernels, cfg);
  EXPECT_LT(r.history.back().train_loss, r.history.front().train_loss);
  EXPECT_DOUBLE_EQ(r.history.back().lr, cfg.initial_lr);
}

TEST(Training, ClassifierNeedsBothClasses) {
  auto data = toy_patches(10, 5);
  for (auto& s : data) s.label = Label::kernel;
  EXPECT_THROW(models::train_classifier(data, {}), std::invalid_argument);
}

TEST(Training, LearningRateDropsOnPlateau) {
  const auto data = toy_patches(40, 6);
  models::TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.iterations = 40;
  cfg.eval_every = 1;
  cfg.log_every = 1;
  cfg.plateau_patience = 2;
  cfg.plateau_min_delta = 1e9;  // no evaluation ever counts as an improvement
  cfg.seed = 7;
  const auto r = models::train_classifier(data, cfg);
  EXPECT_DOUBLE_EQ(r.history.front().lr, 3e-4);
  EXPECT_DOUBLE_EQ(r.history.back().lr, 1e-4);
}

TEST(Training, HistoryCsvHeader) {
  models::TrainHistory h{{100, 0.5, 0.25, 3e-4}};
  EXPECT_EQ(models::history_to_csv(h), "iteration,train_loss,test_loss,lr\n100,0.5,0.25,0.0003\n");
}
