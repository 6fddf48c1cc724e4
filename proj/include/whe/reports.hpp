#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "whe/bundle.hpp"
#include "whe/metric.hpp"
#include "whe/solver.hpp"
#include "whe/weight.hpp"

namespace whe {

// ---------------------------------------------------------------------------
// Kobayashi-Luebke type inequality (r-1) c1^2 <= 2r c2 for a solved metric.

struct LubkeReport {
  double lhs = 0;   // (r-1) c1sq
  double rhs = 0;   // 2 r c2
  double gap = 0;   // rhs - lhs
  double tau = 0;
  bool holds = false;
  bool equality = false;
  double tracefree_rho = 0;  // sup of the trace-free part in a unitary frame
  double tracefree_phi = 0;
  bool projectively_flat = false;
  double residual = 0;       // how well the metric solves the equation
  double hessian_margin = 0;
  nlohmann::json to_json() const;
};

// Throws PreconditionWeight when v fails the Hessian condition in dimension n.
LubkeReport lubke_report(const EquivariantBundle& b, const MetricProfile& h,
                         const WeightFunction& v, const Grid& g, int n = 1, double tau = 1e-8,
                         double flat_tol = 1e-6);

// ---------------------------------------------------------------------------
// Weighted Yang-Mills energy for exponential weights.

struct YangMillsReport {
  double tracefree_energy = 0;  // int |K°|^2 / v
  double delta = 0;             // c1sq - 2 r ch2, closed form
  double ym = 0;                // 4 pi^2 int v tr(rho°^2)
  double identity_residual = 0; // |tracefree_energy + delta/r - ym/4pi^2|
  double lower_bound = 0;       // 4 pi^2 delta / r
  double bound_gap = 0;         // ym - lower_bound
  int rank = 0;
  nlohmann::json to_json() const;
};

// Throws WrongFamily unless v is exponential (constant counts as rate 0).
YangMillsReport yang_mills_report(const EquivariantBundle& b, const MetricProfile& h,
                                  const WeightFunction& v, const Grid& g);

// ---------------------------------------------------------------------------
// Vortex residual 2 pi K_v/(v A) - (log w)'' (phi* (x) phi) - tau Id, in an
// h-unitary frame. A is the area of the Kaehler class (1 on the model).

struct VortexResult {
  MatrixProfile residual;
  double sup = 0;
  double coupling_sup = 0;  // sup of the (log w)'' phi* (x) phi term
  bool holomorphic = false;
  double holomorphic_defect = 0;
  nlohmann::json to_json() const;
};

// section[i] holds the coefficient profile of summand i in the invariant frame.
VortexResult vortex_residual(const EquivariantBundle& b, const MetricProfile& h,
                             const WeightFunction& v, const WeightFunction& w,
                             const std::vector<CVec>& section, double tau, const Grid& g,
                             double area = 1.0);

// ---------------------------------------------------------------------------
// Extension of the tangent bundle of the round Fano sphere by the trivial
// line, with extension class gamma c1.

struct ExtensionSolitonReport {
  double gamma = 0;
  double residual = 0;           // sup over both diagonal blocks
  double offdiag_residual = 0;   // sup of the contracted covariant derivative
  double ke_defect = 0;          // sup |metric density of TX - Kaehler density|
  double trace_integral = 0;     // int tr over the area-2 sphere
  double degree_tangent = 0;
  double slope = 0;
  double slope_expected = 0;
  nlohmann::json to_json() const;
};

double prescribed_extension_gamma(int n = 1);
ExtensionSolitonReport extension_soliton_check(double gamma, const Grid& g);

// ---------------------------------------------------------------------------
// Donaldson functional, with first variation int tr(h^{-1} dh (K_v(h) - c_v))
// (the orientation in which it is convex along geodesics).

// Invariant-frame helpers on relative matrices F = h_ref^{-1} h.
// F exp(t X) for an F-self-adjoint endomorphism X.
MatrixProfile geodesic_point(const EquivariantBundle& b, const MatrixProfile& F,
                             const MatrixProfile& X, double t, const Grid& g);
// log(Fa^{-1} Fb), Fa-self-adjoint.
MatrixProfile log_ratio(const EquivariantBundle& b, const MatrixProfile& Fa,
                        const MatrixProfile& Fb, const Grid& g);

// int tr(X (K_v(F) - c_v)) dmu
double donaldson_derivative(const EquivariantBundle& b, const WeightFunction& v,
                            const MatrixProfile& F, const MatrixProfile& X, const Grid& g);

// Functional increment along the geodesic F exp(t X), t in [t0, t1].
double donaldson_geodesic(const EquivariantBundle& b, const WeightFunction& v,
                          const MatrixProfile& F, const MatrixProfile& X, double t0, double t1,
                          const Grid& g, int quad = 24);

struct DonaldsonEvaluation {
  std::vector<double> legs;     // increment along each geodesic leg
  double value = 0;
  std::vector<double> t;        // path parameter of the derivative samples
  std::vector<double> derivative;
  nlohmann::json to_json() const;
};

// Value of the functional from h_ref to the last waypoint along the
// piecewise-geodesic path h_ref -> waypoints[0] -> ... .
DonaldsonEvaluation donaldson_functional(const EquivariantBundle& b, const WeightFunction& v,
                                         const MetricProfile& h_ref,
                                         const std::vector<MetricProfile>& waypoints,
                                         const Grid& g, int quad = 24);

struct ConvexitySample {
  std::vector<double> second_differences;
  double min = 0;
};

// Second differences of t -> M(h, h exp(t X)) on t = -T..T in steps.
ConvexitySample geodesic_convexity(const EquivariantBundle& b, const WeightFunction& v,
                                   const MetricProfile& h, const MatrixProfile& X, double T,
                                   int steps, const Grid& g);

struct UniquenessCheck {
  // G = h1^{-1} h2 in the invariant frame; defects relative to |mean G|.
  double parallel_defect = 0;  // sup_mu |G(mu) - mean G|
  double scalar_defect = 0;    // sup |G - (tr G / r) Id|
  double scale = 0;
  nlohmann::json to_json() const;
};

UniquenessCheck compare_solutions(const EquivariantBundle& b, const MetricProfile& h1,
                                  const MetricProfile& h2, const Grid& g);

}  // namespace whe
