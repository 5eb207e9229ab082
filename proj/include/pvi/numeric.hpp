#pragma once

#include <span>

namespace pvi {

inline constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

// Sum with a fixed pairwise tree; result is independent of how callers chunk
// work and has O(log n) error growth.
double pairwise_sum(std::span<const double> values);

double pairwise_mean(std::span<const double> values);

// log(sum(exp(values))); -inf for an empty span.
double log_sum_exp(std::span<const double> values);

double sigmoid(double x);

// log(sigmoid(x)) without overflow for large |x|.
double log_sigmoid(double x);

// sum_{k=0}^{order} u^k / k!, accumulated term by term in long double.
double truncated_exp(double u, int order);

}  // namespace pvi
