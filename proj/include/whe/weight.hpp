#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "whe/grid.hpp"

namespace whe {

enum class WeightFamily { constant, exponential, sasaki, polynomial, table };

std::string family_name(WeightFamily f);

struct PolyFactor {
  double c = 1.0;  // constant term
  double p = 0.0;  // slope
  double n = 1.0;  // exponent
};

// Positive weight on the momentum interval with exact first and second
// derivatives. Immutable; cheap to copy.
class WeightFunction {
 public:
  class Impl;

  double value(double mu) const;
  double grad(double mu) const;
  double hess(double mu) const;
  // Exact integral over [a,b] (quadrature only for non-integer multi-factor
  // polynomials).
  double integral(double a, double b) const;
  // True if the analytic formula is finite and positive on [a,b].
  bool formula_valid_on(double a, double b) const;

  WeightFamily family() const;
  nlohmann::json params() const;
  std::string describe() const;

  Vec values(const Grid& g) const;
  Vec grads(const Grid& g) const;
  Vec hessians(const Grid& g) const;

  explicit WeightFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<const Impl> impl_;
};

WeightFunction constant_weight(double c = 1.0);
WeightFunction exp_weight(double rate, double scale = 1.0);
WeightFunction sasaki_weight(double xi, double a, double m);
WeightFunction poly_weight(std::vector<PolyFactor> factors);
WeightFunction table_weight(std::vector<double> x, std::vector<double> y);

// Builds from {"family": ..., params}; throws ConfigError on malformed input
// and NonPositiveWeight when the value sweep finds v <= 0 on [0,1].
WeightFunction make_weight(const nlohmann::json& spec);

struct HessianCheck {
  bool holds = false;         // v'' - ((n+1)/n) v'^2 / v <= tol everywhere
  bool log_concave = false;   // (log v)'' <= tol everywhere
  double max_margin = 0.0;
  double max_log_hessian = 0.0;
  Vec mu;                     // sample points (grid nodes plus both endpoints)
  Vec margin;
};

HessianCheck hessian_condition_check(const WeightFunction& v, int n, const Grid& g,
                                     double tol = 1e-12);

}  // namespace whe
