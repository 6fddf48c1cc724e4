#include <doctest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"
#include "whe/errors.hpp"
#include "whe/intersections.hpp"
#include "whe/reports.hpp"

using namespace whe;
using std::numbers::pi;

TEST_CASE("Luebke: equality and projective flatness for line bundles") {
  const Grid g(64);
  const auto b = test::bundle(test::kO1);
  const auto v = exp_weight(1.0);
  const LubkeReport L = lubke_report(b, line_bundle_whe(b, v, g).metric, v, g);
  CHECK(std::abs(L.gap) < 1e-10);
  CHECK(L.equality);
  CHECK(L.projectively_flat);
}

TEST_CASE("Luebke: inequality at a solved rank-two metric") {
  const Grid g(64);
  const auto b = test::bundle(test::kTwisted);
  const auto v = constant_weight(1.0);
  const SolveOutcome o = continuity_run(b, v, SolverConfig{});
  REQUIRE(o.metric.has_value());
  const LubkeReport L = lubke_report(b, *o.metric, v, g);
  CHECK(L.holds);
  // 2 r c2 - (r-1) c1^2 from the boundary formulas
  const double c1sq = boundary_c1sq(b, v), ch2 = boundary_ch2(b, v);
  CHECK(L.gap == doctest::Approx(c1sq - 4 * ch2).epsilon(1e-9));
}

TEST_CASE("Luebke rejects weights that fail the Hessian condition") {
  const Grid g(32);
  const auto b = test::bundle(test::kO1);
  const auto v = sasaki_weight(1.0, 1.0, 0.5);
  CHECK_THROWS_AS(lubke_report(b, line_bundle_whe(b, v, g).metric, v, g), PreconditionWeight);
}

TEST_CASE("Yang-Mills identity holds for arbitrary metrics") {
  const Grid g(64);
  const auto b = test::bundle(test::kCoupledEqual);
  const auto v = exp_weight(1.0);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const YangMillsReport y = yang_mills_report(b, random_metric(b, g, seed, 0.3), v, g);
    CHECK(y.identity_residual < 1e-6);
    CHECK(y.delta == doctest::Approx(boundary_c1sq(b, v) - 4 * boundary_ch2(b, v)));
    CHECK(y.bound_gap >= -1e-8);
  }
  CHECK_THROWS_AS(yang_mills_report(b, reference_metric(b, g), poly_weight({{1.0, 1.0, 2.0}}), g),
                  WrongFamily);
}

TEST_CASE("Yang-Mills lower bound is attained at a solution") {
  const Grid g(64);
  const auto b = test::bundle(test::kTwisted);
  const auto v = constant_weight(1.0);
  const SolveOutcome o = continuity_run(b, v, SolverConfig{});
  REQUIRE(o.metric.has_value());
  const YangMillsReport y = yang_mills_report(b, *o.metric, v, g);
  CHECK(std::abs(y.bound_gap) < 1e-6);
  CHECK(y.lower_bound == doctest::Approx(4 * pi * pi * y.delta / 2));
}

TEST_CASE("vortex residual") {
  const Grid g(48);
  const auto tangent = test::bundle(R"({"summands":[{"degree":2,"weights":[-1,1]}]})");
  const auto one = constant_weight(1.0);
  const std::vector<CVec> zero = {CVec::Zero(g.size())};
  // round sphere of area 2: constant curvature
  const VortexResult round =
      vortex_residual(tangent, reference_metric(tangent, g), one, one, zero, 2 * pi, g, 2.0);
  CHECK(round.sup < 1e-10);

  const std::vector<CVec> s1 = {CVec::Constant(g.size(), cplx(0.3, 0.1))};
  const std::vector<CVec> s2 = {CVec::Constant(g.size(), cplx(0.6, 0.2))};
  const auto w = poly_weight({{1.0, 1.0, 2.0}});
  const MetricProfile h = random_metric(tangent, g, 9, 0.2);
  const VortexResult a = vortex_residual(tangent, h, one, w, s1, 1.0, g);
  const VortexResult b2 = vortex_residual(tangent, h, one, w, s2, 1.0, g);
  CHECK(b2.coupling_sup == doctest::Approx(4 * a.coupling_sup).epsilon(1e-12));
  CHECK(a.holomorphic);

  // log-linear w: no coupling term
  const VortexResult e = vortex_residual(tangent, h, one, exp_weight(1.0), s1, 1.0, g);
  CHECK(e.coupling_sup < 1e-12);

  const std::vector<CVec> wiggle = {g.nodes().cast<cplx>()};
  CHECK_FALSE(vortex_residual(tangent, h, one, w, wiggle, 1.0, g).holomorphic);
}

TEST_CASE("extension of the tangent bundle solves the soliton system") {
  const Grid g(64);
  const double gamma = prescribed_extension_gamma();
  CHECK(gamma == doctest::Approx(std::sqrt(pi)));
  for (double gm : {0.0, gamma}) {
    const ExtensionSolitonReport e = extension_soliton_check(gm, g);
    CHECK(e.residual < 1e-6);
    CHECK(e.offdiag_residual < 1e-6);
    CHECK(e.trace_integral == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(e.slope == doctest::Approx(e.slope_expected));
  }
}

TEST_CASE("Donaldson functional on a line bundle matches the quadratic formula") {
  const Grid g(48);
  const auto b = test::bundle(test::kO1);
  const auto v = exp_weight(0.8);
  const MetricProfile h0 = reference_metric(b, g);
  const MatrixProfile F0 = relative_matrix(b, h0, g);
  // u = 0.3 cos(pi mu) + 0.2 mu^2
  const Vec u = g.sample([](double x) { return 0.3 * std::cos(pi * x) + 0.2 * x * x; });
  MatrixProfile X(g.size(), 1);
  X.set_entry(0, 0, u.cast<cplx>());
  // -2 pi (sigma v u')' by hand
  const Vec lap = g.sample([&](double x) {
    const double du = -0.3 * pi * std::sin(pi * x) + 0.4 * x;
    const double d2u = -0.3 * pi * pi * std::cos(pi * x) + 0.4;
    const double s = x * (1 - x), ds = 1 - 2 * x;
    return -2 * pi * (ds * v.value(x) * du + s * v.grad(x) * du + s * v.value(x) * d2u);
  });
  const Vec K0 = weighted_contraction(curvature_package(b, h0, g), v, g).entry(0, 0).real();
  const double c = einstein_constant(b, v);
  const Vec shifted = K0 - Vec::Constant(g.size(), c);
  const double expected = g.integrate(u.cwiseProduct(shifted)) +
                          g.integrate(u.cwiseProduct(lap)) / (4 * pi);
  CHECK(donaldson_geodesic(b, v, F0, X, 0.0, 1.0, g) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("Donaldson functional: cocycle, convexity and critical points") {
  const Grid g(64);
  const auto b = test::bundle(test::kCoupledEqual);
  const auto v = exp_weight(1.0);
  const MetricProfile h1 = random_metric(b, g, 11, 0.3), h2 = random_metric(b, g, 12, 0.3),
                      h3 = random_metric(b, g, 13, 0.3);
  const double direct = donaldson_functional(b, v, h1, {h3}, g).value;
  const double via = donaldson_functional(b, v, h1, {h2, h3}, g).value;
  CHECK(std::abs(direct - via) < 1e-7);
  const double back = donaldson_functional(b, v, h3, {h1}, g).value;
  CHECK(std::abs(direct + back) < 1e-7);

  const MatrixProfile X = log_ratio(b, relative_matrix(b, h1, g), relative_matrix(b, h2, g), g);
  CHECK(geodesic_convexity(b, v, h1, X, 1.0, 8, g).min >= -1e-8);

  SolverConfig cfg;
  cfg.initial = "random";
  cfg.seed = 3;
  const SolveOutcome o = continuity_run(b, v, cfg);
  REQUIRE(o.metric.has_value());
  const MatrixProfile F = relative_matrix(b, *o.metric, g);
  CHECK(std::abs(donaldson_derivative(b, v, F, log_ratio(b, F, relative_matrix(b, h2, g), g), g)) <
        1e-7);
}

TEST_CASE("solutions from different starts differ by a constant automorphism") {
  const Grid g(64);
  const auto line = test::bundle(test::kO1);
  const auto v = exp_weight(1.0);
  const auto a = solve_at_weight(line, v, random_metric(line, g, 5, 0.3), SolverConfig{});
  const auto c = solve_at_weight(line, v, random_metric(line, g, 9, 0.3), SolverConfig{});
  REQUIRE(a.ok);
  REQUIRE(c.ok);
  const UniquenessCheck u = compare_solutions(line, a.metric, c.metric, g);
  CHECK(u.parallel_defect < 1e-6);

  const auto b = test::bundle(test::kCoupledEqual);
  SolverConfig c1;
  c1.initial = "random";
  c1.seed = 3;
  SolverConfig c2 = c1;
  c2.seed = 11;
  const SolveOutcome o1 = continuity_run(b, v, c1), o2 = continuity_run(b, v, c2);
  REQUIRE(o1.metric.has_value());
  REQUIRE(o2.metric.has_value());
  CHECK(compare_solutions(b, *o1.metric, *o2.metric, g).parallel_defect < 1e-6);
}
