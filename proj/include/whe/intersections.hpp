#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "whe/bundle.hpp"
#include "whe/fourier.hpp"
#include "whe/metric.hpp"
#include "whe/weight.hpp"

namespace whe {

// One intersection number computed by independent routes.
struct BackendValue {
  double profile = 0;   // curvature-profile integral on the grid
  double closed = 0;    // fixed-point / boundary closed form
  double fourier = 0;   // frequency pairing of the windowed extension
  std::optional<double> analytic;  // analytic continuation (exponential weights)
  double truncation = 0;

  double value() const { return closed; }
  double max_gap() const;
  nlohmann::json to_json() const;
};

struct IntersectionReport {
  BackendValue volume;
  BackendValue degree;
  BackendValue c1sq;
  BackendValue ch2;
  BackendValue c2;
  BackendValue delta;
  double slope = 0;
  double einstein_constant = 0;
  std::optional<double> einstein_constant_w;
  double backend_disagreement = 0;
  double fourier_roundtrip = 0;
  int rank = 0;

  nlohmann::json to_json() const;
};

struct IntersectionOptions {
  FourierOptions fourier;
  double tau_backend = 1e-4;
  bool check = true;  // throw BackendMismatch above tau_backend
};

// Closed forms on the model.
double boundary_degree(const EquivariantBundle& b, const WeightFunction& v);
double boundary_c1sq(const EquivariantBundle& b, const WeightFunction& v);
double boundary_ch2(const EquivariantBundle& b, const WeightFunction& v);

// Profile integrals against a metric.
double profile_degree(const EquivariantBundle& b, const MetricProfile& m, const WeightFunction& v,
                      const Grid& g);
struct CharSquares {
  double c1sq = 0, ch2 = 0, c2 = 0;
};
CharSquares char_square_numbers(const EquivariantBundle& b, const MetricProfile& m,
                                const WeightFunction& v, const Grid& g);

double weighted_volume(const WeightFunction& v, const Grid& g, const IntersectionOptions& o = {});
double weighted_degree(const EquivariantBundle& b, const WeightFunction& v, const Grid& g,
                       const IntersectionOptions& o = {});
double weighted_slope(const EquivariantBundle& b, const WeightFunction& v);
double einstein_constant(const EquivariantBundle& b, const WeightFunction& v);
double einstein_constant(const EquivariantBundle& b, const WeightFunction& v,
                         const WeightFunction& w);

IntersectionReport intersection_report(const EquivariantBundle& b, const WeightFunction& v,
                                       const Grid& g, const MetricProfile* metric = nullptr,
                                       const WeightFunction* w = nullptr,
                                       const IntersectionOptions& o = {});

struct BetaReport {
  double beta = 0;
  double aggregated = 0;         // min(1, beta)
  double numerator = 0;          // weighted degree of the subsheaf
  double denominator = 0;        // weighted degree of the tangent bundle
  double denominator_profile = 0;
  double beta_other = 0;         // the other branch, when defined
  bool other_defined = false;
  bool liftable = true;
  nlohmann::json to_json() const;
};

// Fano sphere, tangent lifts (-1,1), weight e^{s mu_F} with mu_F = 2 mu - 1.
BetaReport beta_invariant(const EquivariantLineBundle& sub, bool liftable, double s,
                          const Grid& g, int n = 1);

}  // namespace whe
