#include <gtest/gtest.h>

#include <random>

#include "../support/oracles.hpp"
#include "ppush/core/errors.hpp"
#include "ppush/core/mlp.hpp"
#include "ppush/core/tape.hpp"

using namespace ppush;

namespace {

struct Problem {
  MlpArch arch;
  ParamSet params;
  std::vector<double> x, y;
  std::size_t batch;
};

Problem random_problem(std::mt19937_64& rng, std::size_t max_layers, std::size_t max_dim,
                       std::uint64_t seed) {
  Problem p;
  p.arch = oracle::random_arch(rng, max_layers, max_dim);
  p.params = ParamSet::init(p.arch, seed);
  // Wider than the default init so tanh/relu leave the linear regime.
  auto flat = oracle::normal_vector(p.arch.num_params(), rng, 0.8);
  p.params.unflatten(flat);
  p.batch = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
  p.x = oracle::normal_vector(p.batch * p.arch.input_dim(), rng);
  p.y = oracle::normal_vector(p.batch * p.arch.output_dim(), rng);
  return p;
}

std::vector<double> autodiff_grad(Problem& p) {
  Tensor x({p.batch, p.arch.input_dim()}, p.x);
  Tensor y({p.batch, p.arch.output_dim()}, p.y);
  ForwardPass pass(p.arch, p.params, x);
  pass.mse_loss(y);
  pass.backward(p.params);
  return p.params.flatten_grad();
}

void expect_matches_fd(Problem& p) {
  auto ad = autodiff_grad(p);
  auto fd = oracle::fd_loss_grad(p.arch, p.params.flatten(), p.x, p.y, p.batch);
  ASSERT_EQ(ad.size(), fd.size());
  for (std::size_t i = 0; i < ad.size(); ++i) {
    EXPECT_TRUE(oracle::close(ad[i], fd[i], 1e-5, 1e-8))
        << "component " << i << ": autodiff " << ad[i] << " vs fd " << fd[i];
  }
}

}  // namespace

TEST(Backward, ConstantLossGivesZeroGrads) {
  Tape tape;
  Tensor w({3, 2}, 0.4);
  auto wv = tape.parameter(w);
  auto out = tape.matmul(tape.constant(Tensor({4, 3}, 0.0)), wv);
  auto loss = tape.mse(out, tape.constant(Tensor({4, 2}, 0.0)));
  tape.backward(loss);
  for (double g : tape.grad(wv).data()) EXPECT_EQ(g, 0.0);
}

TEST(Backward, ThreeLayerTanhMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    Problem p;
    p.arch = MlpArch{{4, 6, 5, 2}, Activation::Tanh};
    p.params = ParamSet::init(p.arch, seed);
    p.batch = 3;
    p.x = oracle::normal_vector(p.batch * 4, rng);
    p.y = oracle::normal_vector(p.batch * 2, rng);
    expect_matches_fd(p);
  }
}

TEST(Backward, RandomNetsMatchFiniteDifferences) {
  std::mt19937_64 rng(2024);
  for (std::uint64_t trial = 0; trial < 40; ++trial) {
    Problem p = random_problem(rng, 4, 8, trial);
    SCOPED_TRACE(trial);
    expect_matches_fd(p);
  }
}

TEST(Backward, LinearNetMatchesClosedForm) {
  std::mt19937_64 rng(3);
  for (std::size_t batch : {1u, 4u}) {
    MlpArch arch{{3, 1}, Activation::Identity};
    ParamSet params = ParamSet::init(arch, 9);
    params[1].tensor[0] = 0.0;
    auto xv = oracle::normal_vector(batch * 3, rng);
    auto yv = oracle::normal_vector(batch, rng);
    ForwardPass pass(arch, params, Tensor({batch, 3}, xv));
    pass.mse_loss(Tensor({batch, 1}, yv));
    pass.backward(params);

    // dL/dW = 2 X^T (X W - y) / batch
    const auto w = params[0].tensor.data();
    for (std::size_t i = 0; i < 3; ++i) {
      double expected = 0;
      for (std::size_t r = 0; r < batch; ++r) {
        const double resid = xv[3 * r] * w[0] + xv[3 * r + 1] * w[1] + xv[3 * r + 2] * w[2] - yv[r];
        expected += 2.0 * xv[3 * r + i] * resid / static_cast<double>(batch);
      }
      EXPECT_NEAR(params[0].tensor.grad()[i], expected, 1e-13);
    }
  }
}

TEST(Backward, WithoutLossIsStateError) {
  MlpArch arch{{2, 2}, Activation::Tanh};
  ParamSet params = ParamSet::init(arch, 1);
  ForwardPass pass(arch, params, Tensor({1, 2}, 1.0));
  EXPECT_THROW(pass.backward(params), StateError);
}

TEST(Backward, TapeIsConsumed) {
  MlpArch arch{{2, 2}, Activation::Tanh};
  ParamSet params = ParamSet::init(arch, 1);
  ForwardPass pass(arch, params, Tensor({1, 2}, 1.0));
  pass.mse_loss(Tensor({1, 2}, 0.0));
  pass.backward(params);
  EXPECT_THROW(pass.backward(params), StateError);

  Tape empty;
  EXPECT_THROW(empty.backward(Tape::Var{0}), StateError);
}

TEST(Backward, RejectsForeignParamSet) {
  MlpArch arch{{2, 2}, Activation::Tanh};
  ParamSet params = ParamSet::init(arch, 1);
  ParamSet other = params;
  ForwardPass pass(arch, params, Tensor({1, 2}, 1.0));
  pass.mse_loss(Tensor({1, 2}, 0.0));
  EXPECT_THROW(pass.backward(other), StateError);
}

TEST(Backward, LossShapeMismatchThrows) {
  MlpArch arch{{2, 3}, Activation::Tanh};
  ParamSet params = ParamSet::init(arch, 1);
  ForwardPass pass(arch, params, Tensor({2, 2}, 1.0));
  EXPECT_THROW(pass.mse_loss(Tensor({2, 1}, 0.0)), DimensionError);
}
