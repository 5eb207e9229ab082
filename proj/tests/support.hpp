#pragma once
// Test-only helpers. The integrator here is deliberately separate from the
// library oracle (composite Simpson in long double, fixed panels).
#include <Eigen/Dense>
#include <cmath>
#include <functional>

namespace testsupport {

inline double simpson(const std::function<long double(long double)>& f, double lo, double hi,
                      int panels = 20000) {
  if (panels % 2) ++panels;
  const long double h = (static_cast<long double>(hi) - lo) / panels;
  long double acc = f(lo) + f(hi);
  for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0L : 2.0L) * f(lo + i * h);
  return static_cast<double>(acc * h / 3.0L);
}

inline long double normal_pdf(long double z, long double mu, long double sd) {
  const long double t = (z - mu) / sd;
  return std::exp(-0.5L * t * t) / (sd * std::sqrt(2.0L * 3.14159265358979323846264L));
}

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline bool rel_close(double a, double b, double rel, double abs_floor = 0.0) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

}  // namespace testsupport
