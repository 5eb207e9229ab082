#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "doctest.h"
#include "pvi/numeric.hpp"
#include "pvi/rng.hpp"

using namespace pvi;

TEST_CASE("pairwise sum agrees with naive sum and is order-stable") {
  std::vector<double> v;
  for (int i = 0; i < 1001; ++i) v.push_back(1.0 / (i + 1));
  double naive = 0.0;
  for (double x : v) naive += x;
  CHECK(pairwise_sum(v) == doctest::Approx(naive).epsilon(1e-14));
  CHECK(pairwise_mean(v) == doctest::Approx(naive / 1001).epsilon(1e-14));
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}

TEST_CASE("log_sum_exp handles large and empty inputs") {
  std::vector<double> big{1000.0, 1000.0};
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)));
  CHECK(log_sum_exp(std::vector<double>{}) == -std::numeric_limits<double>::infinity());
  std::vector<double> mixed{-1e300, 0.0};
  CHECK(log_sum_exp(mixed) == doctest::Approx(0.0));
}

TEST_CASE("log_sigmoid saturates without overflow") {
  CHECK(log_sigmoid(0.0) == doctest::Approx(std::log(0.5)));
  CHECK(log_sigmoid(800.0) <= 0.0);
  CHECK(log_sigmoid(800.0) > -1e-300);
  CHECK(log_sigmoid(-800.0) == doctest::Approx(-800.0));
  CHECK(std::isfinite(log_sigmoid(-1e6)));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(3.0) == doctest::Approx(1.0 / (1.0 + std::exp(-3.0))));
}

TEST_CASE("truncated_exp matches the finite sum") {
  CHECK(truncated_exp(1.0, 3) == doctest::Approx(8.0 / 3.0).epsilon(1e-15));
  CHECK(truncated_exp(0.0, 5) == 1.0);
  CHECK(truncated_exp(-1.0, 2) == doctest::Approx(0.5));
  CHECK(truncated_exp(2.0, 40) == doctest::Approx(std::exp(2.0)).epsilon(1e-15));
}

TEST_CASE("noise stream is a pure function of its counters") {
  const auto a = NoiseStream::normal_at(7, 3, 11, 5);
  const auto b = NoiseStream::normal_at(7, 3, 11, 5);
  CHECK(a == b);
  CHECK(a != NoiseStream::normal_at(7, 4, 11, 5));
  CHECK(a != NoiseStream::normal_at(8, 3, 11, 5));
  NoiseStream s(7, 3);
  for (int i = 0; i < 11; ++i) s.next(5);
  const NoiseDraw d = s.next(5);
  CHECK(d.eps == a);
  CHECK(d.index == 11);
  CHECK(s.position() == 12);
}

TEST_CASE("noise stream moments") {
  NoiseStream s(2024, 1);
  const int n = 200000;
  double m = 0, m2 = 0, u = 0;
  for (int i = 0; i < n; ++i) {
    const double x = s.next_normal();
    m += x;
    m2 += x * x;
    u += s.next_uniform();
  }
  m /= n;
  m2 /= n;
  u /= n;
  CHECK(std::abs(m) < 4.0 / std::sqrt(n));
  CHECK(std::abs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(u - 0.5) < 4.0 * std::sqrt(1.0 / 12 / n));
}

TEST_CASE("uniforms lie in [0, 1)") {
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const double u = NoiseStream::uniform_at(1, 2, i, 0);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}
