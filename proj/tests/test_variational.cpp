#include <cmath>

#include "doctest.h"
#include "pvi/errors.hpp"
#include "pvi/numeric.hpp"
#include "pvi/oracle.hpp"
#include "pvi/rng.hpp"
#include "pvi/variational.hpp"
#include "reference_values.hpp"
#include "support.hpp"

using namespace pvi;
using testsupport::vec;

TEST_CASE("reparameterize") {
  const VariationalParams p(vec({1.0, -2.0}), vec({0.3, -0.5}));
  CHECK(reparameterize(p, Eigen::VectorXd::Zero(2)) == p.mu);
  const VariationalParams s = VariationalParams::standard(3);
  const Eigen::VectorXd e = vec({0.1, -1.2, 2.5});
  CHECK(reparameterize(s, e) == e);
  CHECK_THROWS_AS(reparameterize(p, Eigen::VectorXd::Zero(3)), InputError);
}

TEST_CASE("reparameterized draws have the right moments") {
  const VariationalParams p(vec({0.7}), vec({-0.4}));
  const int n = 1000000;
  NoiseStream s(11, 0);
  double m = 0, m2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = reparameterize(p, s.next(1).eps)[0];
    m += z;
    m2 += z * z;
  }
  m /= n;
  const double var = m2 / n - m * m;
  const double sd2 = std::exp(2 * -0.4);
  CHECK(std::abs(m - 0.7) < 4.0 * std::sqrt(sd2 / n));
  CHECK(std::abs(var - sd2) < 4.0 * sd2 * std::sqrt(2.0 / n));
}

TEST_CASE("log_q values") {
  const VariationalParams s = VariationalParams::standard(1);
  CHECK(log_q(s, vec({0.0})) == doctest::Approx(ref::kStdNormalLogPdf0).epsilon(1e-15));
  const VariationalParams p(vec({0.4, -1.0}), vec({0.2, -0.3}));
  const VariationalParams shifted(vec({2.4, 1.0}), vec({0.2, -0.3}));
  const Eigen::VectorXd z = vec({0.1, 0.5});
  CHECK(log_q(p, z) == doctest::Approx(log_q(shifted, z + vec({2.0, 2.0}))).epsilon(1e-14));
  CHECK_THROWS_AS(log_q(p, vec({0.0})), InputError);

  const VariationalParams one(vec({0.3}), vec({-0.6}));
  const double mass = testsupport::simpson(
      [&](long double z) { return std::exp(static_cast<long double>(log_q(one, vec({static_cast<double>(z)})))); },
      -8.0, 8.0);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("score of q") {
  const VariationalParams p(vec({0.4, -1.0}), vec({0.2, -0.3}));
  CHECK(grad_log_q_in_lambda(p, p.mu).head(2).cwiseAbs().maxCoeff() == 0.0);

  // Finite differences in lambda at random z.
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd z = NoiseStream::normal_at(3, 0, t, 2) * 1.5;
    const Eigen::VectorXd g = grad_log_q_in_lambda(p, z);
    const Eigen::VectorXd fd = fd_gradient(
        [&](const Eigen::VectorXd& lam) { return log_q(VariationalParams::unflatten(lam), z); },
        p.flatten());
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(g[i] - fd[i]) <= 1e-5 * std::max(1.0, std::abs(g[i])));
    }
    const Eigen::VectorXd gz = grad_log_q_in_z(p, z);
    const Eigen::VectorXd fdz =
        fd_gradient([&](const Eigen::VectorXd& x) { return log_q(p, x); }, z);
    CHECK((gz - fdz).cwiseAbs().maxCoeff() < 1e-6);
  }

  // Zero mean under q.
  const int n = 1000000;
  NoiseStream s(12, 0);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(4), sum2 = Eigen::VectorXd::Zero(4);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd g = grad_log_q_in_lambda(p, reparameterize(p, s.next(2).eps));
    sum += g;
    sum2 += g.cwiseAbs2();
  }
  for (int i = 0; i < 4; ++i) {
    const double mean = sum[i] / n;
    const double se = std::sqrt((sum2[i] / n - mean * mean) / n);
    CHECK(std::abs(mean) < 4.0 * se);
  }
}

TEST_CASE("entropy matches quadrature") {
  const VariationalParams p(vec({0.3}), vec({0.25}));
  const double h = -testsupport::simpson(
      [&](long double z) {
        const double lq = log_q(p, vec({static_cast<double>(z)}));
        return std::exp(static_cast<long double>(lq)) * lq;
      },
      -12.0, 12.0);
  CHECK(entropy(p) == doctest::Approx(h).epsilon(1e-10));
}

TEST_CASE("flatten, json and random init") {
  const VariationalParams p(vec({0.4, -1.0}), vec({0.2, -0.3}));
  CHECK(p.flatten() == vec({0.4, -1.0, 0.2, -0.3}));
  const auto back = VariationalParams::unflatten(p.flatten());
  CHECK(back.mu == p.mu);
  CHECK(back.rho == p.rho);
  const auto j = params_from_json(to_json(p));
  CHECK(j.mu == p.mu);
  CHECK(j.rho == p.rho);
  CHECK_THROWS(params_from_json(nlohmann::json{{"mu", {1.0}}, {"rho", {1.0, 2.0}}}));

  const auto a = VariationalParams::random_init(5, 9);
  const auto b = VariationalParams::random_init(5, 9);
  CHECK(a.mu == b.mu);
  CHECK(a.rho == Eigen::VectorXd::Zero(5));
  CHECK(a.mu != VariationalParams::random_init(5, 10).mu);
  CHECK(a.all_finite());
  VariationalParams bad = a;
  bad.mu[2] = std::nan("");
  CHECK_FALSE(bad.all_finite());
}
