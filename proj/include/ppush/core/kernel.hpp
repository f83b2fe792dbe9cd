#pragma once

#include <span>
#include <vector>

namespace ppush {

/// sum_i (a_i - b_i)^2, symmetric in its arguments bit for bit.
double squared_distance(std::span<const double> a, std::span<const double> b);

/// k(a, b) = exp(-||a - b||^2 / (2 l^2)).
double sq_exp_kernel(std::span<const double> a, std::span<const double> b,
                     double length_scale);

/// exp(-d2 / (2 l^2)), for callers that accumulate d2 themselves.
double sq_exp_from_squared_distance(double d2, double length_scale);

/// grad_a k(a, b) = -(a - b) / l^2 * k(a, b).
std::vector<double> sq_exp_kernel_grad_arg1(std::span<const double> a,
                                            std::span<const double> b,
                                            double length_scale);

/// Same as above, writing into `out` (size of a) given a precomputed k(a, b).
void sq_exp_kernel_grad_arg1(std::span<const double> a, std::span<const double> b,
                             double length_scale, double k, std::span<double> out);

}  // namespace ppush
