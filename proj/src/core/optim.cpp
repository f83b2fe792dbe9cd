#include "ppush/core/optim.hpp"

#include <algorithm>

#include <cmath>
#include <string>

#include "ppush/core/errors.hpp"

namespace ppush {

Optimizer Optimizer::sgd(double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw ConfigError("SGD learning rate must be finite and non-negative");
  }
  return {Kind::Sgd, lr};
}

void sgd_step(ParamSet& params, double lr) {
  if (!(lr >= 0.0)) throw ConfigError("SGD learning rate must be non-negative");
  for (auto& e : params) {
    if (!e.tensor.has_grad()) throw StateError("sgd_step: missing gradient for " + e.name);
  }
  for (auto& e : params) {
    auto v = e.tensor.data();
    auto g = e.tensor.grad();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
  }
}

PriorSpec PriorSpec::gaussian(double sigma) {
  PriorSpec p{Kind::Gaussian, sigma};
  p.validate();
  return p;
}

void PriorSpec::validate() const {
  if (kind == Kind::Gaussian && !(sigma > 0.0 && std::isfinite(sigma))) {
    throw ConfigError("Gaussian prior sigma must be positive, got " + std::to_string(sigma));
  }
}

ParamSet prior_logdensity_grad(const PriorSpec& prior, const ParamSet& params) {
  prior.validate();
  ParamSet out = params.zeros_like();
  if (prior.kind == PriorSpec::Kind::Uniform) return out;
  const double inv_var = 1.0 / (prior.sigma * prior.sigma);
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto src = params[t].tensor.data();
    auto dst = out[t].tensor.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = -src[i] * inv_var;
  }
  return out;
}

void prior_logdensity_grad(const PriorSpec& prior, std::span<const double> theta,
                           std::span<double> out) {
  prior.validate();
  if (out.size() != theta.size()) throw DimensionError("prior gradient buffer size mismatch");
  if (prior.kind == PriorSpec::Kind::Uniform) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double inv_var = 1.0 / (prior.sigma * prior.sigma);
  for (std::size_t i = 0; i < theta.size(); ++i) out[i] = -theta[i] * inv_var;
}

}  // namespace ppush
