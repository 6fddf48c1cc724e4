#include <doctest.h>

#include <cmath>

#include "whe/errors.hpp"
#include "whe/weight.hpp"

using namespace whe;
using nlohmann::json;

TEST_CASE("exponential weight: values, derivatives and integral") {
  for (double t : {-2.0, 0.5, 1.0, 2.0}) {
    const WeightFunction v = exp_weight(t);
    for (double mu : {0.0, 0.3, 1.0}) {
      CHECK(v.value(mu) == doctest::Approx(std::exp(t * mu)).epsilon(1e-15));
      CHECK(v.grad(mu) == doctest::Approx(t * std::exp(t * mu)).epsilon(1e-15));
      CHECK(v.hess(mu) == doctest::Approx(t * t * std::exp(t * mu)).epsilon(1e-15));
    }
    CHECK(v.integral(0, 1) == doctest::Approx((std::exp(t) - 1) / t).epsilon(1e-14));
  }
}

TEST_CASE("sasaki weight: finite differences and antiderivative") {
  const WeightFunction v = sasaki_weight(1.0, 2.0, 2.0);
  const double h = 1e-5;
  for (double mu : {0.2, 0.6}) {
    CHECK(v.value(mu) == doctest::Approx(std::pow(mu + 2, -2.0)));
    CHECK(v.grad(mu) == doctest::Approx((v.value(mu + h) - v.value(mu - h)) / (2 * h)).epsilon(1e-8));
    CHECK(v.hess(mu) == doctest::Approx((v.grad(mu + h) - v.grad(mu - h)) / (2 * h)).epsilon(1e-8));
  }
  CHECK(v.integral(0, 1) == doctest::Approx(1.0 / 2 - 1.0 / 3).epsilon(1e-14));
}

TEST_CASE("polynomial and table weights") {
  const WeightFunction p = poly_weight({{1.0, 1.0, 2.0}});
  CHECK(p.integral(0, 1) == doctest::Approx(7.0 / 3).epsilon(1e-14));
  CHECK(p.hess(0.4) == doctest::Approx(2.0));
  const WeightFunction t = table_weight({0.0, 0.25, 0.5, 0.75, 1.0}, {1.0, 1.5, 2.0, 1.8, 1.5});
  CHECK(t.value(0.5) == doctest::Approx(2.0));
  CHECK(t.value(1.0) == doctest::Approx(1.5));
  CHECK(t.family() == WeightFamily::table);
}

TEST_CASE("weight parsing errors") {
  CHECK_THROWS_AS(make_weight(json::parse(R"({"family":"cubic"})")), ConfigError);
  CHECK_THROWS_AS(make_weight(json::parse(R"({"family":"sasaki","xi":1,"a":-0.5})")),
                  NonPositiveWeight);
  CHECK_THROWS_AS(make_weight(json::parse(R"({"family":"constant","value":-1})")),
                  NonPositiveWeight);
  CHECK(make_weight(json::parse(R"({"family":"exp","rate":1})")).family() ==
        WeightFamily::exponential);
}

TEST_CASE("hessian condition") {
  const Grid g(32);
  const auto c = hessian_condition_check(constant_weight(2.0), 1, g);
  CHECK(c.holds);
  CHECK(std::abs(c.max_margin) < 1e-12);
  // (mu + 1/2)^{-1}: v'' - 2 v'^2 / v vanishes identically
  const auto s = hessian_condition_check(sasaki_weight(1.0, 0.5, 1.0), 1, g);
  CHECK(s.holds);
  CHECK(std::abs(s.max_margin) < 1e-12);
  // e^{mu}: v'' - 2 v'^2/v = -e^{mu}
  const auto e = hessian_condition_check(exp_weight(1.0), 1, g);
  CHECK(e.holds);
  CHECK(e.max_margin == doctest::Approx(-1.0).epsilon(0.05));
  // (1+mu)^{-1/2}: margin (3/4 - 1/2)(1+mu)^{-5/2} > 0
  const auto f = hessian_condition_check(sasaki_weight(1.0, 1.0, 0.5), 1, g);
  CHECK_FALSE(f.holds);
  CHECK(f.max_margin == doctest::Approx(0.25).epsilon(1e-6));
}
