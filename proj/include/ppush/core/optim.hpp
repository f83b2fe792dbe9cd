#pragma once

#include <span>

#include "ppush/core/mlp.hpp"

namespace ppush {

/// Per-particle optimizer configuration. `None` means the particle only
/// accumulates gradients and never updates itself; algorithms such as SVGD
/// apply updates manually.
struct Optimizer {
  enum class Kind { None, Sgd };
  Kind kind = Kind::None;
  double lr = 0.0;

  static Optimizer none() { return {}; }
  static Optimizer sgd(double lr);
};

/// theta <- theta - lr * grad, using the gradients stored in `params`.
void sgd_step(ParamSet& params, double lr);

struct PriorSpec {
  enum class Kind { Uniform, Gaussian };
  Kind kind = Kind::Uniform;
  double sigma = 1.0;

  static PriorSpec uniform() { return {}; }
  static PriorSpec gaussian(double sigma);
  void validate() const;
};

/// Gradient of log p(theta), laid out like `params` (values only, no grad
/// buffers). Uniform: zeros. Gaussian(sigma): -theta / sigma^2.
ParamSet prior_logdensity_grad(const PriorSpec& prior, const ParamSet& params);
/// Same gradient over a flattened parameter vector, written into `out`.
void prior_logdensity_grad(const PriorSpec& prior, std::span<const double> theta,
                           std::span<double> out);

}  // namespace ppush
