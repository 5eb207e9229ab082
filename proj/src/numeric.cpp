#include "pvi/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pvi {

namespace {

constexpr std::size_t kPairwiseLeaf = 8;

double pairwise_sum_impl(const double* data, std::size_t n) {
  if (n <= kPairwiseLeaf) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += data[i];
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum_impl(data, half) +
         pairwise_sum_impl(data + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
  return pairwise_sum_impl(values.data(), values.size());
}

double pairwise_mean(std::span<const double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  return pairwise_sum(values) / static_cast<double>(values.size());
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - top);
  return top + std::log(acc);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double truncated_exp(double u, int order) {
  long double term = 1.0L;
  long double acc = 1.0L;
  for (int k = 1; k <= order; ++k) {
    term *= static_cast<long double>(u) / k;
    acc += term;
  }
  return static_cast<double>(acc);
}

}  // namespace pvi
