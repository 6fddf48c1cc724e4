#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "whe/errors.hpp"
#include "whe/intersections.hpp"
#include "whe/stability.hpp"

using namespace whe;

namespace {
double summand_slope(const EquivariantLineBundle& l, const WeightFunction& v) {
  return v.value(1.0) * l.w1 - v.value(0.0) * l.w0;
}
}  // namespace

TEST_CASE("slope table matches the boundary formula") {
  const auto b = test::bundle(test::kRank3);
  const auto v = exp_weight(1.0);
  const StabilityVerdict s = stability_verdict(b, v);
  for (const auto& row : s.slope_table) {
    double sum = 0;
    for (int i : row.candidate.subset) sum += summand_slope(b.summand(i), v);
    CHECK(row.slope == doctest::Approx(sum / row.candidate.rank()));
  }
  CHECK(s.verdict == Verdict::unstable);
  // maximal slope e is reached by {0}, {1} and {0,1}
  CHECK(s.witnesses.size() == 3);
  CHECK(s.witness.subset == std::vector<int>{0, 1});
  CHECK(s.twist_pruning_holds);
}

TEST_CASE("verdicts on split bundles") {
  const auto e = exp_weight(1.0);
  const auto one = constant_weight(1.0);
  CHECK(stability_verdict(test::bundle(test::kEqual), e).verdict == Verdict::polystable);
  CHECK(stability_verdict(test::bundle(test::kTwisted), e).verdict == Verdict::unstable);
  CHECK(stability_verdict(test::bundle(test::kTwisted), one).verdict == Verdict::polystable);
  const auto s = stability_verdict(test::bundle(test::kTwisted), e);
  REQUIRE(s.witnesses.size() == 1);
  CHECK(s.witnesses[0].subset == std::vector<int>{0});
  CHECK(stability_verdict(test::bundle(test::kO1), e).verdict == Verdict::stable);
}

TEST_CASE("twisted candidates never beat the untwisted slope") {
  const auto b = test::bundle(test::kTwisted);
  const auto v = exp_weight(0.7);
  for (const auto& c : enumerate_candidates(b, 2)) {
    if (!c.pruned) continue;
    SubsheafCandidate plain = c;
    for (size_t i = 0; i < c.subset.size(); ++i) plain.lines[i] = b.summand(c.subset[i]);
    CHECK(candidate_slope(c, v) < candidate_slope(plain, v));
  }
}

TEST_CASE("weighted Euler characteristic of the trivial bundle") {
  const auto b = test::bundle(R"({"summands":[{"degree":0,"weights":[0,0]}]})");
  const auto v = exp_weight(1.0);
  for (int k : {3, 10}) {
    double direct = 0;
    for (int j = 0; j <= k; ++j) direct += std::exp(double(j) / k);
    CHECK(chi_v(b, v, k) == doctest::Approx(direct).epsilon(1e-13));
  }
  CHECK_THROWS_AS(weight_spectrum(test::bundle(R"({"summands":[{"degree":-3,"weights":[0,-3]}]})"), 1),
                  NegativeTwist);
  CHECK(dyadic_range(64, 1024) == std::vector<int>{64, 128, 256, 512, 1024});
}

TEST_CASE("Euler expansion coefficients") {
  const auto b = test::bundle(test::kTwisted);
  const auto v = exp_weight(1.0);
  const EulerSeries e = euler_expansion_check(b, v, dyadic_range(64, 1024));
  CHECK(e.pass);
  CHECK(std::abs(e.A - (std::exp(1.0) - 1)) <= 5.0 / 64);
  CHECK(std::abs(e.B - (weighted_slope(b, v) + 0.5 * (1 + std::exp(1.0)))) <= 5.0 / 64);
  CHECK(std::abs(e.decay_exponent + 1) < 0.2);
}

TEST_CASE("Gieseker comparison agrees with the slope verdict") {
  const auto b = test::bundle(test::kTwisted);
  const GiesekerReport r = gieseker_compare(b, exp_weight(1.0), dyadic_range(64, 1024));
  CHECK_FALSE(r.gieseker_stable);
  bool found = false;
  for (const auto& row : r.rows)
    if (row.subset == std::vector<int>{0}) found = row.order == GiesekerOrder::destabilizes;
  CHECK(found);
}
