#include <cmath>
#include <memory>

#include "doctest.h"
#include "pvi/bounds.hpp"
#include "pvi/errors.hpp"
#include "pvi/model.hpp"
#include "pvi/oracle.hpp"
#include "pvi/variational.hpp"
#include "reference_values.hpp"
#include "support.hpp"

using namespace pvi;
using testsupport::vec;

TEST_CASE("marginal likelihood of the conjugate model") {
  const auto m = conjugate_gaussian_model(1.0, 1.0, 0.0);
  const auto ml = marginal_likelihood(m);
  CHECK(ml.value == doctest::Approx(ref::kEvidenceStd).epsilon(1e-9));
  CHECK(ml.error_estimate < 1e-9);
  const QuadratureGrid g = grid_for_model(m);
  CHECK(std::abs(marginal_likelihood(m, g.refined()).value - ml.value) < 1e-9);

  QuadratureGrid gh = grid_for_model(m, QuadratureRule::GaussHermite);
  CHECK(marginal_likelihood(m, gh).value == doctest::Approx(ref::kEvidenceStd).epsilon(1e-9));
}

TEST_CASE("2-D product model factorizes") {
  auto a = std::make_shared<ConjugateGaussianModel>(1.0, 1.0, 0.0);
  auto b = std::make_shared<ConjugateGaussianModel>(2.0, 0.5, 1.3);
  const ProductModel p({a, b});
  const double expect = a->evidence() * b->evidence();
  CHECK(marginal_likelihood(p).value == doctest::Approx(expect).epsilon(1e-8));
  CHECK(marginal_likelihood(p, grid_for_model(p, QuadratureRule::GaussHermite)).value ==
        doctest::Approx(expect).epsilon(1e-8));
}

TEST_CASE("grid validation") {
  QuadratureGrid g;
  g.ranges = {{-1, 1}, {-1, 1}, {-1, 1}};
  CHECK_THROWS_AS(g.validate(), UnsupportedError);
  g.ranges = {{-1, 1}};
  g.nodes = 4;
  CHECK_THROWS_AS(g.validate(), InputError);
  g.nodes = 64;
  g.ranges = {{1, -1}};
  CHECK_THROWS_AS(g.validate(), InputError);
  CHECK(default_nodes(1) == kDefaultNodes1D);
  CHECK(default_nodes(2) == kDefaultNodes2D);
  Eigen::VectorXd z(3);
  const auto three = std::make_shared<FunctionModel>(
      3, "iso", [](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); });
  CHECK_THROWS_AS(marginal_likelihood(*three), UnsupportedError);
}

TEST_CASE("gauss-hermite rule integrates polynomials against exp(-x^2)") {
  std::vector<double> x, w;
  gauss_hermite(20, x, w);
  double m0 = 0, m2 = 0, m4 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wi = w[i] * std::exp(-x[i] * x[i]);
    m0 += wi;
    m2 += wi * x[i] * x[i];
    m4 += wi * std::pow(x[i], 4);
  }
  const double sp = std::sqrt(3.14159265358979323846);
  CHECK(m0 == doctest::Approx(sp).epsilon(1e-13));
  CHECK(m2 == doctest::Approx(sp / 2).epsilon(1e-13));
  CHECK(m4 == doctest::Approx(3 * sp / 4).epsilon(1e-13));
}

TEST_CASE("posterior moments") {
  const auto m = conjugate_gaussian_model(1.0, 1.0, 0.0);
  const auto pm = posterior_moments(m);
  CHECK(std::abs(pm.mean[0]) < 1e-10);
  CHECK(pm.var[0] == doctest::Approx(0.5).epsilon(1e-10));
  const auto sym = posterior_moments(BimodalModel(BimodalTarget::symmetric()));
  CHECK(std::abs(sym.mean[0]) < 1e-10);
  const auto g = grid_for_model(m);
  CHECK(std::abs(posterior_moments(m, g.refined()).var[0] - pm.var[0]) < 1e-8);
}

TEST_CASE("energy expectations against the independent mpmath values") {
  const auto m = conjugate_gaussian_model(1.0, 1.0, 0.0);
  const VariationalParams p(vec({0.3}), vec({-0.2}));
  const EnergyTable t(m, p);
  CHECK(t.power(1.1, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(t.elbo() == doctest::Approx(ref::kConjA_Elbo).epsilon(1e-11));
  CHECK(t.power(1.1, 1) == doctest::Approx(ref::kConjA_Power1).epsilon(1e-10));
  CHECK(t.power(1.1, 2) == doctest::Approx(ref::kConjA_Power2).epsilon(1e-10));
  CHECK(t.power(1.1, 3) == doctest::Approx(ref::kConjA_Power3).epsilon(1e-10));
  CHECK(t.bound(1.1, 3) == doctest::Approx(ref::kConjA_Bound3).epsilon(1e-11));
  CHECK(t.bound(1.1, 5) == doctest::Approx(ref::kConjA_Bound5).epsilon(1e-11));
  CHECK(t.alpha_moment(0.5) == doctest::Approx(ref::kConjA_AlphaHalf).epsilon(1e-11));
  CHECK(t.power(0.0, 1) == doctest::Approx(t.elbo()).epsilon(1e-12));
  CHECK(exact_elbo(m, p) == doctest::Approx(ref::kConjA_Elbo).epsilon(1e-11));
  CHECK(exact_perturbative_bound(m, p, 1.1, 3) == doctest::Approx(ref::kConjA_Bound3).epsilon(1e-11));

  const BimodalModel bm(BimodalTarget{});
  const VariationalParams pb(vec({0.5}), vec({0.2}));
  const EnergyTable tb(bm, pb);
  CHECK(tb.elbo() == doctest::Approx(ref::kBimodal_Elbo).epsilon(1e-10));
  CHECK(tb.surrogate(2.0, 3) == doctest::Approx(ref::kBimodal_Surrogate3).epsilon(1e-10));
  CHECK(tb.alpha_moment(0.2) == doctest::Approx(ref::kBimodal_AlphaMoment02).epsilon(1e-10));
}

TEST_CASE("energy powers vanish at the exact posterior") {
  const auto m = conjugate_gaussian_model(1.0, 1.0, 0.0);
  const VariationalParams post(vec({0.0}), vec({0.5 * std::log(0.5)}));
  const double v0 = -m.log_evidence();
  for (int k = 1; k <= 7; ++k) {
    CHECK(std::abs(exact_expectation_power(m, post, v0, k)) < 1e-12);
  }
  CHECK(exact_expectation_power(m, post, v0, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("finite differences") {
  const auto quad = [](const Eigen::VectorXd& x) {
    return 3.0 * x[0] * x[0] - 2.0 * x[0] * x[1] + 0.5 * x[1] * x[1] + x[0] - 4.0;
  };
  const Eigen::VectorXd x = vec({0.7, -1.3});
  const Eigen::VectorXd g = fd_gradient(quad, x);
  CHECK(std::abs(g[0] - (6.0 * 0.7 + 2.6 + 1.0)) < 1e-8);
  CHECK(std::abs(g[1] - (-1.4 - 1.3)) < 1e-8);

  // Central differences are second order: halving the step quarters the error.
  const auto f = [](const Eigen::VectorXd& v) { return std::sin(v[0]); };
  const double e1 = std::abs(fd_gradient(f, vec({0.4}), 1e-2)[0] - std::cos(0.4));
  const double e2 = std::abs(fd_gradient(f, vec({0.4}), 5e-3)[0] - std::cos(0.4));
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.01));
}

TEST_CASE("quadrature elbo gradient matches the conjugate closed form") {
  // ELBO(mu, rho) for prior N(0, a), noise b, datum x, q = N(mu, s^2).
  const double a = 2.0, b = 0.5, x = 1.3;
  const auto m = conjugate_gaussian_model(a, b, x);
  const Eigen::VectorXd lam = vec({0.2, -0.4});
  const double mu = lam[0], s2 = std::exp(2 * lam[1]);
  const double dmu = -mu / a + (x - mu) / b;
  const double drho = -s2 / a - s2 / b + 1.0;
  const Eigen::VectorXd g = fd_gradient(
      [&](const Eigen::VectorXd& l) { return exact_elbo(m, VariationalParams::unflatten(l)); }, lam);
  CHECK(g[0] == doctest::Approx(dmu).epsilon(1e-6));
  CHECK(g[1] == doctest::Approx(drho).epsilon(1e-6));
}
