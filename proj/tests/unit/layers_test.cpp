#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "kernelcount/nn/layers.hpp"
#include "kernelcount/nn/network.hpp"

using namespace kc::nn;
using kc::Rng;
using kc::testing::random_tensor;

namespace {

// Direct-loop valid convolution over N x H x W x C with k x k x Cin x Cout filters.
Tensor<double> naive_conv(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b, std::size_t s) {
  const std::size_t n = x.dim(0), h = x.dim(1), wd = x.dim(2), c = x.dim(3);
  const std::size_t k = w.dim(0), f = w.dim(3);
  const std::size_t oh = (h - k) / s + 1, ow = (wd - k) / s + 1;
  Tensor<double> y({n, oh, ow, f});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox)
        for (std::size_t o = 0; o < f; ++o) {
          double acc = b[o];
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx)
              for (std::size_t ci = 0; ci < c; ++ci) {
                acc += x[((i * h + oy * s + ky) * wd + ox * s + kx) * c + ci] * w[((ky * k + kx) * c + ci) * f + o];
              }
          y[((i * oh + oy) * ow + ox) * f + o] = acc;
        }
  return y;
}

Tensor<double> naive_pool(const Tensor<double>& x, std::size_t k, std::size_t s, bool max) {
  const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const std::size_t oh = (h - k) / s + 1, ow = (w - k) / s + 1;
  Tensor<double> y({n, oh, ow, c});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox)
        for (std::size_t ch = 0; ch < c; ++ch) {
          double acc = max ? -1e300 : 0.0;
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
              const double v = x[((i * h + oy * s + ky) * w + ox * s + kx) * c + ch];
              acc = max ? std::max(acc, v) : acc + v;
            }
          y[((i * oh + oy) * ow + ox) * c + ch] = max ? acc : acc / static_cast<double>(k * k);
        }
  return y;
}

void expect_near(const Tensor<double>& a, const Tensor<double>& b, double tol) {
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], tol) << "at " << i;
}

}  // namespace

TEST(Conv2d, MatchesDirectLoops) {
  Rng rng(11);
  for (std::size_t stride : {1u, 2u}) {
    for (std::size_t k : {1u, 3u}) {
      Conv2d<double> conv("c", 3, 5, k, stride);
      conv.weight().value = random_tensor(conv.weight().value.shape(), rng);
      conv.bias().value = random_tensor({5}, rng);
      const auto x = random_tensor({2, 9, 7, 3}, rng);
      expect_near(conv.infer(x), naive_conv(x, conv.weight().value, conv.bias().value, stride), 1e-12);
    }
  }
}

TEST(Conv2d, LargeBatchesSpanSeveralChunks) {
  // 25 full-size samples need several column-buffer chunks; every sample must
  // match its own single-sample pass, forward and backward.
  Rng rng(13);
  Conv2d<double> conv("c", 3, 4, 3);
  conv.weight().value = random_tensor(conv.weight().value.shape(), rng);
  conv.bias().value = random_tensor({4}, rng);
  const auto x = random_tensor({25, 32, 32, 3}, rng);
  const auto g = random_tensor({25, 30, 30, 4}, rng);
  expect_near(conv.infer(x), naive_conv(x, conv.weight().value, conv.bias().value, 1), 1e-12);

  conv.weight().grad.fill(0.0);
  conv.bias().grad.fill(0.0);
  conv.forward(x, Mode::train);
  const auto dx = conv.backward(g, true);
  const auto dw = conv.weight().grad;

  Conv2d<double> single = conv;
  single.weight().grad.fill(0.0);
  for (std::size_t b = 0; b < 25; ++b) {
    single.forward(x.slice_rows(b, b + 1), Mode::train);
    const auto dxb = single.backward(g.slice_rows(b, b + 1), true);
    expect_near(dx.slice_rows(b, b + 1), dxb, 1e-12);
  }
  expect_near(dw, single.weight().grad, 1e-9);
}

TEST(Conv2d, OutputShapeAndErrors) {
  Conv2d<float> conv("c", 3, 32, 3);
  EXPECT_EQ(conv.output_shape({32, 32, 3}), (Shape{30, 30, 32}));
  EXPECT_THROW(conv.output_shape({32, 32, 4}), std::invalid_argument);
  EXPECT_THROW(conv.output_shape({2, 2, 3}), std::invalid_argument);
}

TEST(Pool2d, MatchesDirectLoops) {
  Rng rng(12);
  const auto x = random_tensor({2, 8, 8, 3}, rng);
  Pool2d<double> avg("p", PoolKind::average, 2, 2), mx("q", PoolKind::max, 3, 1);
  expect_near(avg.infer(x), naive_pool(x, 2, 2, false), 1e-12);
  expect_near(mx.infer(x), naive_pool(x, 3, 1, true), 0.0);
}

TEST(Pool2d, SevenBySevenAverageGivesTwoByTwo) {
  Pool2d<float> p("p", PoolKind::average, 7, 1);
  EXPECT_EQ(p.output_shape({8, 8, 64}), (Shape{2, 2, 64}));
}

TEST(BatchNorm, TrainModeNormalizesBatch) {
  Rng rng(13);
  BatchNorm<double> bn("bn", 4);
  auto x = random_tensor({16, 4}, rng, 3.0);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += 5.0;
  const auto y = bn.forward(x, Mode::train);
  for (std::size_t c = 0; c < 4; ++c) {
    double m = 0, v = 0;
    for (std::size_t r = 0; r < 16; ++r) m += y[r * 4 + c];
    m /= 16;
    for (std::size_t r = 0; r < 16; ++r) v += (y[r * 4 + c] - m) * (y[r * 4 + c] - m);
    v /= 16;
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v, 1.0, 1e-4);
  }
  EXPECT_TRUE(bn.has_statistics());
}

TEST(BatchNorm, RunningStatisticsUseMomentum) {
  BatchNorm<double> bn("bn", 1);
  Tensor<double> x({4, 1}, std::vector<double>{1, 2, 3, 4});
  bn.forward(x, Mode::train);
  // mean 2.5, unbiased variance 5/3; running = 0.9 * init + 0.1 * batch.
  EXPECT_NEAR(bn.running_mean()[0], 0.25, 1e-12);
  EXPECT_NEAR(bn.running_var()[0], 0.9 + 0.1 * 5.0 / 3.0, 1e-12);
}

TEST(BatchNorm, InferUsesRunningStatistics) {
  BatchNorm<double> bn("bn", 2);
  EXPECT_THROW(bn.infer(Tensor<double>({3, 2})), std::invalid_argument);
  bn.running_mean()[0] = 1.0;
  bn.running_var()[0] = 4.0;
  bn.running_mean()[1] = -1.0;
  bn.running_var()[1] = 1.0;
  bn.mark_statistics();
  const auto y = bn.infer(Tensor<double>({1, 2}, std::vector<double>{3.0, 0.0}));
  EXPECT_NEAR(y[0], 2.0 / std::sqrt(4.0 + 1e-5), 1e-9);
  EXPECT_NEAR(y[1], 1.0 / std::sqrt(1.0 + 1e-5), 1e-9);
}

TEST(BatchNorm, TrainModeNeedsTwoRows) {
  BatchNorm<double> bn("bn", 3);
  EXPECT_THROW(bn.forward(Tensor<double>({1, 3}), Mode::train), std::invalid_argument);
}

TEST(Dense, AffineMap) {
  Dense<double> fc("fc", 3, 2);
  fc.weight().value = Tensor<double>({3, 2}, std::vector<double>{1, 2, 3, 4, 5, 6});
  fc.bias().value = Tensor<double>({2}, std::vector<double>{0.5, -0.5});
  const auto y = fc.infer(Tensor<double>({1, 3}, std::vector<double>{1, 1, 1}));
  EXPECT_DOUBLE_EQ(y[0], 9.5);
  EXPECT_DOUBLE_EQ(y[1], 11.5);
  // Spatial input is flattened.
  EXPECT_EQ(fc.output_shape({1, 1, 3}), (Shape{2}));
}

TEST(Activations, SigmoidStaysInsideOpenInterval) {
  Sigmoid<float> s("s");
  const auto y = s.infer(Tensor<float>({1, 4}, std::vector<float>{-200.f, -20.f, 20.f, 200.f}));
  for (float v : y.values()) {
    EXPECT_GT(v, 0.0f);
    EXPECT_LT(v, 1.0f);
  }
  Relu<float> r("r");
  const auto z = r.infer(Tensor<float>({1, 3}, std::vector<float>{-1.f, 0.f, 2.f}));
  EXPECT_EQ(z[0], 0.0f);
  EXPECT_EQ(z[2], 2.0f);
}

TEST(Network, BackwardWithoutForwardThrows) {
  auto net = std::move(kc::nn::NetworkBuilder<double>({4}, 1).dense(2)).build();
  EXPECT_THROW(net.backward(Tensor<double>({1, 2})), std::logic_error);
}

TEST(Network, RejectsIncompatibleLayer) {
  Network<float> net({8, 8, 3});
  EXPECT_THROW(net.add(std::make_unique<Conv2d<float>>("c", 4, 2, 3)), std::invalid_argument);
}

TEST(Network, InferRangeComposes) {
  Rng rng(5);
  auto net = std::move(NetworkBuilder<double>({6, 6, 2}, 9).conv(3, 3).relu().avg_pool(2, 2).dense(4).sigmoid()).build();
  const auto x = random_tensor({3, 6, 6, 2}, rng);
  const auto mid = net.infer_range(x, 0, 3);
  expect_near(net.infer_range(mid, 3, net.size()), net.infer(x), 1e-15);
}

TEST(Network, CopyIsDeep) {
  auto net = std::move(NetworkBuilder<float>({4}, 3).dense(2)).build();
  auto copy = net;
  copy.params()[0]->value[0] += 1.0f;
  EXPECT_NE(copy.params()[0]->value[0], net.params()[0]->value[0]);
}
