#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "kernelcount/nn/tensor.hpp"
#include "kernelcount/util/random.hpp"

using kc::nn::Shape;
using kc::nn::Tensor;

TEST(Tensor, ShapeAndFill) {
  Tensor<float> t({2, 3, 4}, 1.5f);
  EXPECT_EQ(t.rank(), 3u);
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.dim(2), 4u);
  EXPECT_FLOAT_EQ(t[23], 1.5f);
  EXPECT_EQ(kc::nn::shape_string(t.shape()), "2x3x4");
}

TEST(Tensor, RejectsMismatchedValues) {
  EXPECT_THROW(Tensor<float>({2, 2}, std::vector<float>(3)), std::invalid_argument);
  Tensor<float> t({2, 3});
  EXPECT_THROW(t.reshape({4, 2}), std::invalid_argument);
  EXPECT_NO_THROW(t.reshape({3, 2}));
}

TEST(Tensor, SliceRowsAndStack) {
  Tensor<float> a({2, 2}, std::vector<float>{1, 2, 3, 4});
  Tensor<float> b({2, 2}, std::vector<float>{5, 6, 7, 8});
  const Tensor<float>* items[] = {&a, &b};
  const auto s = kc::nn::stack<float>(items);
  EXPECT_EQ(s.shape(), (Shape{2, 2, 2}));
  EXPECT_FLOAT_EQ(s[4], 5.0f);
  const auto row = s.slice_rows(1, 2);
  EXPECT_EQ(row.shape(), (Shape{1, 2, 2}));
  EXPECT_FLOAT_EQ(row[3], 8.0f);
  EXPECT_THROW(s.slice_rows(1, 3), std::out_of_range);
}

TEST(Tensor, FiniteCheck) {
  Tensor<double> t({3});
  EXPECT_TRUE(t.all_finite());
  t[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(t.all_finite());
}

TEST(Rng, Deterministic) {
  kc::Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next(), b.next());
  kc::Rng c(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(c.below(7), 7u);
  }
}

TEST(Rng, PermutationIsComplete) {
  kc::Rng rng(3);
  auto p = kc::permutation(50, rng);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], i);
}
