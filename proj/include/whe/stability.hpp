#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "whe/bundle.hpp"
#include "whe/weight.hpp"

namespace whe {

struct Twist {
  int m0 = 0;
  int m1 = 0;
};

struct SubsheafCandidate {
  std::vector<int> subset;
  std::vector<Twist> twists;          // one per selected summand
  std::vector<EquivariantLineBundle> lines;  // resulting line data
  bool pruned = false;                // twisted variants never maximize the slope

  int rank() const { return static_cast<int>(subset.size()); }
  std::string describe() const;
};

// Proper nonempty summand subsets, followed by single-summand endpoint twists
// up to max_twist (flagged as pruned).
std::vector<SubsheafCandidate> enumerate_candidates(const EquivariantBundle& b, int max_twist = 1);

double candidate_slope(const SubsheafCandidate& c, const WeightFunction& v);

enum class Verdict { stable, semistable_not_stable, polystable, unstable };
std::string verdict_name(Verdict v);

struct SlopeRow {
  SubsheafCandidate candidate;
  double slope = 0;
};

struct StabilityVerdict {
  Verdict verdict = Verdict::stable;
  double bundle_slope = 0;
  std::vector<SlopeRow> slope_table;    // unpruned candidates
  std::vector<SubsheafCandidate> witnesses;  // all maximal-slope destabilizers
  SubsheafCandidate witness;            // largest-rank maximal one
  double witness_slope = 0;
  bool twist_pruning_holds = true;        // every twist lowers the slope
  nlohmann::json to_json() const;
};

StabilityVerdict stability_verdict(const EquivariantBundle& b, const WeightFunction& v,
                                   double tol = 1e-10);

struct RationalWeight {
  long long num;
  long long den;
  double value() const { return double(num) / double(den); }
};

// Throws NegativeTwist if d_i + k < 0 for some summand.
std::vector<RationalWeight> weight_spectrum(const EquivariantBundle& b, int k);
double chi_v(const EquivariantBundle& b, const WeightFunction& v, int k);
// Largest distance of a weight in the spectrum from [0,1].
double spectrum_overhang(const EquivariantBundle& b, int k);

struct EulerSeries {
  std::vector<int> k_values;
  std::vector<double> chi_values;       // chi / rank
  std::vector<double> residuals;        // chi/rank - (A k + B)
  double A = 0, B = 0, C = 0;           // fit A k + B + C / k
  double A_expected = 0, B_expected = 0;
  double tolerance = 0;                 // 5 / k_min
  double decay_exponent = 0;
  bool exact = false;                   // residuals at rounding level
  bool weights_outside = false;         // some weight fell outside [0,1]
  bool pass = false;
  nlohmann::json to_json() const;
  std::string to_csv() const;
};

EulerSeries euler_expansion_check(const EquivariantBundle& b, const WeightFunction& v,
                                  const std::vector<int>& k_values);
std::vector<int> dyadic_range(int kmin, int kmax);

enum class GiesekerOrder { destabilizes, below, equal_through_constant };

struct GiesekerRow {
  std::vector<int> subset;
  GiesekerOrder order = GiesekerOrder::below;
  int stabilizes_at = 0;   // first k from which the sign no longer changes
  double leading = 0;      // fitted coefficient of k in the difference
  double constant = 0;     // fitted constant term
  std::vector<double> differences;
};

struct GiesekerReport {
  std::vector<int> k_values;
  std::vector<GiesekerRow> rows;
  bool gieseker_stable = true;  // no row destabilizes
  nlohmann::json to_json() const;
};

// Throws Inconclusive if a sign still changes in the upper half of k_values.
GiesekerReport gieseker_compare(const EquivariantBundle& b, const WeightFunction& v,
                                const std::vector<int>& k_values);

}  // namespace whe
