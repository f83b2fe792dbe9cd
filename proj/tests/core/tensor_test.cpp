#include "ppush/core/tensor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ppush/core/errors.hpp"

using namespace ppush;

TEST(Tensor, ShapeMustMatchDataLength) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
  EXPECT_THROW(Tensor({0, 3}), DimensionError);
  EXPECT_THROW(Tensor(Shape{}), DimensionError);
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
}

TEST(Tensor, RowsColsRequireMatrix) {
  Tensor v({4});
  EXPECT_THROW(v.rows(), DimensionError);
}

TEST(Tensor, GradBufferLifecycle) {
  Tensor t({2, 2});
  EXPECT_FALSE(t.has_grad());
  EXPECT_THROW(t.grad(), StateError);
  t.zero_grad();
  ASSERT_TRUE(t.has_grad());
  EXPECT_EQ(t.grad().size(), 4u);
  EXPECT_THROW(t.set_grad({1.0}), DimensionError);
  t.drop_grad();
  EXPECT_FALSE(t.has_grad());
}

TEST(Tensor, BitEqualDistinguishesSignedZero) {
  Tensor a({1}, 0.0);
  Tensor b({1}, -0.0);
  EXPECT_FALSE(bit_equal(a, b));
  EXPECT_TRUE(bit_equal(a, Tensor({1}, 0.0)));
}

TEST(Tensor, AllFinite) {
  Tensor t({3}, 1.0);
  EXPECT_TRUE(t.all_finite());
  t[1] = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(t.all_finite());
}
