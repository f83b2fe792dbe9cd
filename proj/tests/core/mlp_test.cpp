#include "ppush/core/mlp.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "../support/oracles.hpp"
#include "ppush/core/errors.hpp"

using namespace ppush;

TEST(Forward, ZeroParamsGiveZeroOutput) {
  MlpArch arch{{3, 5, 2}, Activation::Tanh};
  ParamSet params = ParamSet::zeros(arch);
  Tensor x({4, 3}, 0.7);
  Tensor y = forward(arch, params, x);
  ASSERT_EQ(y.shape(), (Shape{4, 2}));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(Forward, IdentityNetReturnsInput) {
  MlpArch arch{{2, 2}, Activation::Identity};
  ParamSet params = ParamSet::zeros(arch);
  params[0].tensor = Tensor::matrix(2, 2, {1, 0, 0, 1});
  Tensor y = forward(arch, params, Tensor::matrix(1, 2, {1, 2}));
  EXPECT_EQ(y[0], 1.0);
  EXPECT_EQ(y[1], 2.0);
}

TEST(Forward, TwoLayerTanhMatchesScalarOracle) {
  MlpArch arch{{2, 3, 1}, Activation::Tanh};
  ParamSet params = ParamSet::zeros(arch);
  params[0].tensor = Tensor::matrix(2, 3, {0.5, -1.0, 0.25, 2.0, 0.1, -0.3});
  params[1].tensor = Tensor({3}, std::vector<double>{0.1, 0.2, -0.1});
  params[2].tensor = Tensor::matrix(3, 1, {1.5, -0.5, 2.0});
  params[3].tensor = Tensor({1}, std::vector<double>{0.05});
  const std::vector<double> x{0.3, -0.7, 1.1, 0.4};

  // Hand-evaluated, one neuron at a time.
  std::vector<double> expected(2);
  for (int r = 0; r < 2; ++r) {
    const double x0 = x[2 * r], x1 = x[2 * r + 1];
    const double h0 = std::tanh(0.5 * x0 + 2.0 * x1 + 0.1);
    const double h1 = std::tanh(-1.0 * x0 + 0.1 * x1 + 0.2);
    const double h2 = std::tanh(0.25 * x0 - 0.3 * x1 - 0.1);
    expected[r] = 1.5 * h0 - 0.5 * h1 + 2.0 * h2 + 0.05;
  }
  Tensor y = forward(arch, params, Tensor({2, 2}, x));
  for (int r = 0; r < 2; ++r) EXPECT_NEAR(y[r], expected[r], 1e-14);
  auto oracle = oracle::scalar_forward(arch, params.flatten(), x, 2);
  for (int r = 0; r < 2; ++r) EXPECT_NEAR(y[r], oracle[r], 1e-14);
}

TEST(Forward, ShapeMismatchThrows) {
  MlpArch arch{{3, 2}, Activation::Tanh};
  ParamSet params = ParamSet::zeros(arch);
  EXPECT_THROW(forward(arch, params, Tensor({4, 2})), DimensionError);
  MlpArch other{{3, 4, 2}, Activation::Tanh};
  EXPECT_THROW(forward(other, params, Tensor({4, 3})), DimensionError);
}

TEST(Forward, IsPureBitwise) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    MlpArch arch = oracle::random_arch(rng, 4, 8);
    ParamSet params = ParamSet::init(arch, trial);
    Tensor x({5, arch.input_dim()}, oracle::normal_vector(5 * arch.input_dim(), rng));
    EXPECT_TRUE(bit_equal(forward(arch, params, x), forward(arch, params, x)));
  }
}

TEST(ParamSet, InitIsSeededAndBounded) {
  MlpArch arch{{4, 16, 1}, Activation::Relu};
  ParamSet a = ParamSet::init(arch, 3);
  EXPECT_TRUE(bit_equal(a, ParamSet::init(arch, 3)));
  EXPECT_FALSE(bit_equal(a, ParamSet::init(arch, 4)));
  for (double v : a[0].tensor.data()) EXPECT_LE(std::abs(v), 0.5);
  for (double v : a[2].tensor.data()) EXPECT_LE(std::abs(v), 0.25);
  EXPECT_EQ(a.numel(), arch.num_params());
  EXPECT_EQ(a[0].name, "layer0.weight");
  EXPECT_EQ(a[3].name, "layer1.bias");
}

TEST(ParamSet, FlattenUnflattenRoundTripsBitwise) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    MlpArch arch = oracle::random_arch(rng, 4, 8);
    ParamSet params = ParamSet::zeros(arch);
    auto v = oracle::normal_vector(arch.num_params(), rng, 3.0);
    v[0] = -0.0;
    params.unflatten(v);
    auto back = params.flatten();
    ASSERT_EQ(back.size(), v.size());
    EXPECT_EQ(std::memcmp(back.data(), v.data(), v.size() * sizeof(double)), 0);
  }
}

TEST(ParamSet, UnflattenRejectsWrongLength) {
  ParamSet params = ParamSet::zeros(MlpArch{{2, 2}, Activation::Tanh});
  std::vector<double> v(5);
  EXPECT_THROW(params.unflatten(v), DimensionError);
}

TEST(ParamSet, FlattenGradRequiresGrads) {
  ParamSet params = ParamSet::zeros(MlpArch{{2, 2}, Activation::Tanh});
  EXPECT_THROW(params.flatten_grad(), StateError);
  params.zero_grad();
  EXPECT_EQ(params.flatten_grad().size(), 6u);
}

TEST(MseLoss, Examples) {
  Tensor a({2, 2}, std::vector<double>{1, 2, 3, 4});
  EXPECT_EQ(mse_loss(a, a), 0.0);
  EXPECT_EQ(mse_loss(Tensor({1}, 0.0), Tensor({1}, 2.0)), 4.0);
  EXPECT_THROW(mse_loss(Tensor({2}), Tensor({3})), DimensionError);
}

TEST(MseLoss, MatchesElementwiseLoop) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = oracle::normal_vector(37, rng);
    auto y = oracle::normal_vector(37, rng);
    EXPECT_NEAR(mse_loss(Tensor({37}, p), Tensor({37}, y)), oracle::scalar_mse(p, y), 1e-12);
  }
}
