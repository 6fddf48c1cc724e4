#include <cmath>
#include <numbers>
#include <sstream>

#include "whe/errors.hpp"
#include "whe/intersections.hpp"
#include "whe/solver.hpp"

namespace whe {

Vec weighted_laplace_solve(const WeightFunction& v, const Vec& rhs, const Grid& g, double tol) {
  const int N = g.size();
  const double mean = g.integrate(rhs);
  if (std::abs(mean) > tol * std::max(1.0, rhs.cwiseAbs().maxCoeff())) {
    std::ostringstream os;
    os << "weighted Laplace equation needs a mean-zero right-hand side (mean " << mean << ")";
    throw NotSolvable(os.str());
  }
  // Bordered system: constants span the kernel, the multiplier absorbs the
  // quadrature-level mean defect.
  Mat M = Mat::Zero(N + 1, N + 1);
  M.topLeftCorner(N, N) = weighted_laplacian_matrix(v, g);
  M.block(0, N, N, 1) = Vec::Ones(N);
  M.block(N, 0, 1, N) = g.weights().transpose();
  Vec r(N + 1);
  r.head(N) = rhs;
  r[N] = 0;
  const Vec sol = M.partialPivLu().solve(r);
  return sol.head(N);
}

MetricProfile conformal_normalize(const EquivariantBundle& b, const MetricProfile& h,
                                  const WeightFunction& v, const Grid& g) {
  const int r = b.rank();
  const double c = einstein_constant(b, v);
  const auto pkg = curvature_package(b, h, g);
  const Vec trK = weighted_contraction(pkg, v, g).trace_real();
  const Vec rhs = (2 * std::numbers::pi / r) * (Vec::Constant(g.size(), r * c) - trK);
  return conformal(h, weighted_laplace_solve(v, rhs, g, 1e-6));
}

double whe_residual(const EquivariantBundle& b, const MetricProfile& h, const WeightFunction& v,
                    const Grid& g) {
  const double c = einstein_constant(b, v);
  MatrixProfile K = weighted_contraction(curvature_package(b, h, g), v, g);
  for (auto& m : K.at) m -= c * CMat::Identity(b.rank(), b.rank());
  const MatrixProfile U = to_unitary(b, h, g, K);
  double s = 0;
  for (const auto& m : U.at) {
    Eigen::SelfAdjointEigenSolver<CMat> es(m, Eigen::EigenvaluesOnly);
    s = std::max(s, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return s;
}

double closed_form_line_moment(const EquivariantLineBundle& l, const WeightFunction& v,
                               double mu) {
  const double c = v.value(1.0) * l.w1 - v.value(0.0) * l.w0;
  return (c * mu + l.w0 * v.value(0.0)) / v.value(mu);
}

LineSolution line_bundle_whe(const EquivariantBundle& b, const WeightFunction& v, const Grid& g) {
  if (b.rank() != 1) throw ConfigError("line_bundle_whe needs a rank-1 bundle");
  LineSolution s;
  s.einstein_constant = einstein_constant(b, v);
  s.metric = conformal_normalize(b, reference_metric(b, g), v, g);
  const auto pkg = curvature_package(b, s.metric, g);
  s.moment = pkg.phi.entry(0, 0).real();
  s.moment_closed_form =
      g.sample([&](double mu) { return closed_form_line_moment(b.summand(0), v, mu); });
  s.moment_error = (s.moment - s.moment_closed_form).cwiseAbs().maxCoeff();
  s.residual = whe_residual(b, s.metric, v, g);
  return s;
}

}  // namespace whe
