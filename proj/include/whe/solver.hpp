#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "whe/bundle.hpp"
#include "whe/metric.hpp"
#include "whe/stability.hpp"
#include "whe/weight.hpp"

namespace whe {

// Solves Delta_v f = rhs with zero mean. Throws NotSolvable if the mean of
// rhs exceeds tol.
Vec weighted_laplace_solve(const WeightFunction& v, const Vec& rhs, const Grid& g,
                           double tol = 1e-8);

// Conformal factor u such that e^u h has tr K_v = rank * c_v.
MetricProfile conformal_normalize(const EquivariantBundle& b, const MetricProfile& h,
                                  const WeightFunction& v, const Grid& g);

// sup over nodes of the largest |eigenvalue| of K_v(h) - c_v Id.
double whe_residual(const EquivariantBundle& b, const MetricProfile& h, const WeightFunction& v,
                    const Grid& g);

struct LineSolution {
  MetricProfile metric;
  Vec moment;             // solved moment profile on the grid
  Vec moment_closed_form; // (c_v mu + w0 v(0)) / v(mu)
  double einstein_constant = 0;
  double residual = 0;
  double moment_error = 0;
};

LineSolution line_bundle_whe(const EquivariantBundle& b, const WeightFunction& v, const Grid& g);
double closed_form_line_moment(const EquivariantLineBundle& l, const WeightFunction& v, double mu);

struct SolverConfig {
  int grid = 64;
  double newton_tol = 1e-9;
  double converged_tol = 1e-9;
  double eps_start = 1.0;
  double eps_ratio = 0.7;
  double eps_floor = 1e-6;
  double blowup = 25.0;
  int max_steps = 120;
  int max_newton = 40;
  double polish_eps = 1e-3;
  double polish_prox = 1e-4;
  std::string initial = "reference";  // or "random"
  double initial_amplitude = 0.3;
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
};

SolverConfig solver_config_from_json(const nlohmann::json& j, SolverConfig base = {});

struct ContinuityState {
  double epsilon = 0;
  double residual = 0;     // grid-sup of L_eps(f) in an h-unitary frame
  double residual_l2 = 0;  // quadrature L2 norm of the same
  double det_error = 0;    // sup |det f - 1|
  double m_eps = 0;        // sup of the spectral norm of log f
  double k0_max = 0;       // sup of the spectral norm of K^0 of h_0
  bool det_ok = true;
  bool bound_ok = true;
};

struct Projector {
  int rank = 0;
  std::vector<int> image;          // summand indices
  std::vector<double> overlaps;    // median overlap per summand
  double slope = 0;
  double bundle_slope = 0;
  double gap = 0;
};

enum class SolveStatus { converged, destabilized, budget_exhausted };
std::string status_name(SolveStatus s);

struct SolveOutcome {
  SolveStatus status = SolveStatus::budget_exhausted;
  std::string reason;
  std::optional<MetricProfile> metric;
  double final_residual = 0;   // independent check of K_v(h) - c_v
  std::optional<Projector> projector;
  std::vector<ContinuityState> trail;
  double start_residual = 0;   // L_1(f_1) at the starting point
  int monitor_violations = 0;
  MetricProfile h0;            // the fixed background metric of the run
  nlohmann::json to_json(const EquivariantBundle& b) const;
};

// Diagonal metric whose summands each solve their own line-bundle equation.
MetricProfile split_metric(const EquivariantBundle& b, const WeightFunction& v, const Grid& g);
// h' for the start construction: split_metric, optionally with a seeded random
// perturbation.
MetricProfile initial_metric(const EquivariantBundle& b, const WeightFunction& v, const Grid& g,
                             const SolverConfig& cfg);
MetricProfile random_metric(const EquivariantBundle& b, const Grid& g, std::uint64_t seed,
                            double amplitude);

// Throws NewtonDiverged when Newton fails with no visible spectral gap.
SolveOutcome continuity_run(const EquivariantBundle& b, const WeightFunction& v,
                            const SolverConfig& cfg,
                            const std::optional<MetricProfile>& start = std::nullopt);

// L_eps(f) for a background metric h0 and an h0-self-adjoint endomorphism f
// (invariant frame), returned in the invariant frame.
MatrixProfile perturbed_operator(const EquivariantBundle& b, const WeightFunction& v,
                                 const MetricProfile& h0, const MatrixProfile& f, double eps,
                                 const Grid& g);

// Solve K_v(h) = c_v starting from h (conformal normalization, then a
// proximal Newton iteration).
struct FixedWeightSolve {
  bool ok = false;
  MetricProfile metric;
  double residual = 0;
};
FixedWeightSolve solve_at_weight(const EquivariantBundle& b, const WeightFunction& v,
                                 const MetricProfile& start, const SolverConfig& cfg);

struct DeformationStep {
  double t = 0;
  MetricProfile metric;
  double residual = 0;
};

struct DeformationResult {
  std::vector<DeformationStep> steps;
  nlohmann::json to_json() const;
};

DeformationResult weight_deformation_run(const EquivariantBundle& b,
                                         const std::function<WeightFunction(double)>& path,
                                         double t_end, double dt, const MetricProfile& start,
                                         const SolverConfig& cfg);

}  // namespace whe
