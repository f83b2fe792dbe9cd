#include "ppush/core/kernel.hpp"

#include <cmath>

#include "ppush/core/errors.hpp"

namespace ppush {

namespace {

void check_args(std::span<const double> a, std::span<const double> b, double l) {
  if (a.size() != b.size()) throw DimensionError("kernel arguments differ in length");
  if (!(l > 0.0)) throw ConfigError("kernel length scale must be positive");
}

}  // namespace

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("squared_distance: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double sq_exp_from_squared_distance(double d2, double length_scale) {
  if (!(length_scale > 0.0)) throw ConfigError("kernel length scale must be positive");
  return std::exp(-d2 / (2.0 * length_scale * length_scale));
}

double sq_exp_kernel(std::span<const double> a, std::span<const double> b,
                     double length_scale) {
  check_args(a, b, length_scale);
  return sq_exp_from_squared_distance(squared_distance(a, b), length_scale);
}

std::vector<double> sq_exp_kernel_grad_arg1(std::span<const double> a,
                                            std::span<const double> b,
                                            double length_scale) {
  std::vector<double> out(a.size());
  sq_exp_kernel_grad_arg1(a, b, length_scale, sq_exp_kernel(a, b, length_scale), out);
  return out;
}

void sq_exp_kernel_grad_arg1(std::span<const double> a, std::span<const double> b,
                             double length_scale, double k, std::span<double> out) {
  check_args(a, b, length_scale);
  if (out.size() != a.size()) throw DimensionError("kernel gradient output size mismatch");
  const double scale = -k / (length_scale * length_scale);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = scale * (a[i] - b[i]);
}

}  // namespace ppush
