#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "whe/errors.hpp"
#include "whe/metric.hpp"
#include "whe/solver.hpp"

using namespace whe;

TEST_CASE("quadrature integrates polynomials up to degree 2N-1") {
  const Grid g(12);
  CHECK(g.weights().sum() == doctest::Approx(1.0).epsilon(1e-14));
  for (int k = 0; k < 24; ++k) {
    const Vec f = g.sample([&](double x) { return std::pow(x, k); });
    CHECK(std::abs(g.integrate(f) - 1.0 / (k + 1)) < 1e-14);
  }
  for (double x : g.nodes()) {
    CHECK(x > 0);
    CHECK(x < 1);
  }
}

TEST_CASE("differentiation and sigma-weighted differentiation are exact on polynomials") {
  const Grid g(10);
  const Vec p = g.sample([](double x) { return x * x * x - 2 * x + 0.5; });
  const Vec dp = g.sample([](double x) { return 3 * x * x - 2; });
  CHECK((g.derivative(p) - dp).cwiseAbs().maxCoeff() < 1e-11);
  // d/dmu (mu(1-mu) mu^2) = 3 mu^2 - 4 mu^3
  const Vec q = g.sample([](double x) { return x * x; });
  const Vec dq = g.sample([](double x) { return 3 * x * x - 4 * x * x * x; });
  CHECK((g.sigma_diff() * q - dq).cwiseAbs().maxCoeff() < 1e-11);
  CHECK(g.interpolate(p, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g.interpolate(p, 1.0) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("bundle validation") {
  CHECK_THROWS_AS(test::bundle(R"({"summands":[{"degree":1,"weights":[0,2]}]})"), InvalidBundle);
  CHECK_THROWS_AS(test::bundle(R"({"summands":[]})"), Error);
  const auto b = test::bundle(test::kCoupledO0O2);
  CHECK(b.rank() == 2);
  CHECK(b.degree() == 2);
  REQUIRE(b.couplings().size() == 1);
  const Coupling& c = b.couplings()[0];
  // mu^k (1-mu)^(d_to - d_from - k)
  const int d = b.summand(c.to).degree - b.summand(c.from).degree;
  for (double mu : {0.2, 0.7})
    CHECK(coupling_norm_sq(b, c, mu) ==
          doctest::Approx(std::pow(mu, c.k) * std::pow(1 - mu, d - c.k)).epsilon(1e-14));
  CHECK(test::bundle(test::kTwisted).blocks().size() == 2);
  CHECK(test::bundle(test::kCoupledEqual).blocks().size() == 1);
}

TEST_CASE("moment map takes the lift weights at the fixed points for any metric") {
  const Grid g(48);
  for (const char* spec : {test::kO1, test::kTwisted, test::kCoupledO0O2}) {
    const auto b = test::bundle(spec);
    for (std::uint64_t seed : {3u, 8u}) {
      const MetricProfile h = random_metric(b, g, seed, 0.3);
      const CurvaturePackage pkg = curvature_package(b, h, g);
      const Vec tr = pkg.phi.trace_real();
      double w0 = 0, w1 = 0;
      for (const auto& s : b.summands()) {
        w0 += s.w0;
        w1 += s.w1;
      }
      CHECK(g.interpolate(tr, 0.0) == doctest::Approx(w0).epsilon(1e-8));
      CHECK(g.interpolate(tr, 1.0) == doctest::Approx(w1).epsilon(1e-8));
      // mean curvature integrates to the degree
      CHECK(g.integrate(pkg.rho.trace_real()) == doctest::Approx(b.degree()).epsilon(1e-9));
      // rho is the mu-derivative of phi
      const MatrixProfile dphi = pkg.phi.derivative(g);
      double gap = 0;
      for (int n = 0; n < g.size(); ++n) gap = std::max(gap, (dphi.at[n] - pkg.rho.at[n]).norm());
      CHECK(gap < 1e-7);
    }
  }
}

TEST_CASE("reference metric of a line bundle has linear moment map") {
  const Grid g(16);
  const auto b = test::bundle(R"({"summands":[{"degree":3,"weights":[-1,2]}]})");
  const auto pkg = curvature_package(b, reference_metric(b, g), g);
  const Vec phi = pkg.phi.entry(0, 0).real();
  for (int n = 0; n < g.size(); ++n) CHECK(phi[n] == doctest::Approx(-1 + 3 * g.nodes()[n]).epsilon(1e-10));
}

TEST_CASE("relative matrix round trip and frame ratios") {
  const Grid g(20);
  const auto b = test::bundle(test::kCoupledO0O2);
  const MetricProfile h = random_metric(b, g, 5, 0.3);
  const MetricProfile back = metric_from_relative(b, relative_matrix(b, h, g));
  for (size_t i = 0; i < h.diag.size(); ++i) CHECK((h.diag[i] - back.diag[i]).norm() < 1e-12);
  for (size_t i = 0; i < h.offdiag.size(); ++i) CHECK((h.offdiag[i] - back.offdiag[i]).norm() < 1e-12);
  const Mat R = frame_ratio(b, 0.3);
  CHECK(R(0, 1) * R(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("non-positive metric is rejected") {
  const Grid g(8);
  const auto b = test::bundle(test::kEqual);
  MetricProfile h = reference_metric(b, g);
  h.diag[1][3] = -1.0;
  CHECK_THROWS_AS(check_positive(b, h, g), NonPositiveMetric);
}

TEST_CASE("random metrics are reproducible from the seed") {
  const Grid g(16);
  const auto b = test::bundle(test::kCoupledEqual);
  const MetricProfile a = random_metric(b, g, 42, 0.3), c = random_metric(b, g, 42, 0.3),
                      d = random_metric(b, g, 43, 0.3);
  CHECK((a.diag[0] - c.diag[0]).norm() == 0.0);
  CHECK((a.diag[0] - d.diag[0]).norm() > 0.0);
}
