#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "whe/errors.hpp"
#include "whe/fourier.hpp"
#include "whe/intersections.hpp"
#include "whe/solver.hpp"

using namespace whe;

TEST_CASE("closed forms for O(1) with exponential weight") {
  const auto b = test::bundle(test::kO1);
  for (double t : {0.5, 1.0, 2.0}) {
    const WeightFunction v = exp_weight(t);
    const double et = std::exp(t);
    CHECK(boundary_degree(b, v) == doctest::Approx(et).epsilon(1e-14));
    CHECK(boundary_c1sq(b, v) == doctest::Approx(t * et).epsilon(1e-14));
    CHECK(boundary_ch2(b, v) == doctest::Approx(0.5 * t * et).epsilon(1e-14));
  }
}

TEST_CASE("closed forms for a twisted split bundle") {
  const auto b = test::bundle(test::kTwisted);
  const double t = 1.3, et = std::exp(t);
  const WeightFunction v = exp_weight(t);
  // summands (0,1) and (-1,0)
  CHECK(boundary_degree(b, v) == doctest::Approx(et + 1));
  CHECK(boundary_c1sq(b, v) == doctest::Approx(t * et - t));
  CHECK(boundary_ch2(b, v) == doctest::Approx(0.5 * (t * et - t)));
  CHECK(weighted_slope(b, v) == doctest::Approx((et + 1) / 2));
}

TEST_CASE("fourier pairing reproduces volume and point evaluations") {
  for (const WeightFunction& v : {exp_weight(1.0), sasaki_weight(1.0, 2.0, 2.0),
                                  poly_weight({{1.0, 1.0, 2.0}})}) {
    const FourierData f(v);
    CHECK(f.roundtrip_error() < 1e-6);
    CHECK(std::abs(f.pair(symbols::volume()) - v.integral(0, 1)) < 1e-4);
    for (double a : {0.0, 0.4, 1.0}) CHECK(std::abs(f.pair(symbols::point(a)) - v.value(a)) < 1e-4);
  }
  const FourierData e(exp_weight(1.0));
  REQUIRE(e.analytic_pair(symbols::volume()).has_value());
  CHECK(*e.analytic_pair(symbols::volume()) == doctest::Approx(std::exp(1.0) - 1).epsilon(1e-10));
}

TEST_CASE("intersection numbers agree across backends and metric representatives") {
  const Grid g(64);
  for (const char* spec : {test::kO1, test::kTwisted, test::kCoupledO0O2}) {
    const auto b = test::bundle(spec);
    for (const WeightFunction& v : {constant_weight(1.0), exp_weight(1.0),
                                    sasaki_weight(1.0, 2.0, 2.0)}) {
      const IntersectionReport r = intersection_report(b, v, g);
      CHECK(r.backend_disagreement < 1e-4);
      CHECK(r.degree.closed == doctest::Approx(boundary_degree(b, v)));
      const MetricProfile h = random_metric(b, g, 17, 0.3);
      const IntersectionReport q = intersection_report(b, v, g, &h);
      CHECK(std::abs(q.degree.profile - r.degree.closed) < 1e-8);
      CHECK(std::abs(q.c1sq.profile - r.c1sq.closed) < 1e-8);
      CHECK(std::abs(q.ch2.profile - r.ch2.closed) < 1e-8);
      CHECK(r.einstein_constant == doctest::Approx(boundary_degree(b, v) / b.rank()));
    }
  }
}

TEST_CASE("einstein constant with a second weight divides by its volume") {
  const auto b = test::bundle(test::kO1);
  const auto v = exp_weight(1.0), w = exp_weight(2.0);
  CHECK(einstein_constant(b, v, w) ==
        doctest::Approx(std::exp(1.0) / ((std::exp(2.0) - 1) / 2)));
}

TEST_CASE("beta invariant on the sphere") {
  const Grid g(64);
  const auto sub = EquivariantLineBundle::make(1, 0, 1);
  for (double s : {0.0, 0.5, 1.0}) {
    const BetaReport r = beta_invariant(sub, true, s, g);
    CHECK(std::abs(r.beta - 2 / (std::exp(2 * s) + 1)) < 1e-8);
    CHECK(r.aggregated <= 1.0);
  }
}
