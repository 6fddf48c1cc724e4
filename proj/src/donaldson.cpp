#include <cmath>
#include <limits>

#include "whe/errors.hpp"
#include "whe/intersections.hpp"
#include "whe/reports.hpp"

namespace whe {

namespace {

// Upper Cholesky factor of the relative metric in the reference-unitary frame.
CMat unitary_factor(const CMat& F, const Mat& R) {
  const CMat Fh = F.cwiseProduct(R.cast<cplx>());
  Eigen::LLT<CMat> llt(0.5 * (Fh + Fh.adjoint()));
  if (llt.info() != Eigen::Success) throw NonPositiveMetric("relative metric is not positive");
  return llt.matrixU();
}

template <class Fn>
CMat hermitian_apply(const CMat& H, Fn fn) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (H + H.adjoint()));
  const Vec lam = es.eigenvalues().unaryExpr(fn);
  return es.eigenvectors() * lam.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

MatrixProfile geodesic_point(const EquivariantBundle& b, const MatrixProfile& F,
                             const MatrixProfile& X, double t, const Grid& g) {
  MatrixProfile out(g.size(), b.rank());
  for (int n = 0; n < g.size(); ++n) {
    const Mat R = frame_ratio(b, g.nodes()[n]);
    const CMat C = unitary_factor(F.at[n], R);
    const CMat Ci = C.inverse();
    const CMat U = C * X.at[n].cwiseProduct(R.cast<cplx>()) * Ci;
    const CMat E = Ci * hermitian_apply(U, [t](double x) { return std::exp(t * x); }) * C;
    out.at[n] = F.at[n] * E.cwiseQuotient(R.cast<cplx>());
  }
  return out;
}

MatrixProfile log_ratio(const EquivariantBundle& b, const MatrixProfile& Fa,
                        const MatrixProfile& Fb, const Grid& g) {
  MatrixProfile out(g.size(), b.rank());
  for (int n = 0; n < g.size(); ++n) {
    const Mat R = frame_ratio(b, g.nodes()[n]);
    const CMat C = unitary_factor(Fa.at[n], R);
    const CMat Ci = C.inverse();
    const CMat Fb_h = Fb.at[n].cwiseProduct(R.cast<cplx>());
    const CMat U = Ci.adjoint() * Fb_h * Ci;
    const CMat L = hermitian_apply(U, [](double x) {
      if (!(x > 0)) throw NonPositiveMetric("log_ratio: target metric is not positive");
      return std::log(x);
    });
    out.at[n] = (Ci * L * C).cwiseQuotient(R.cast<cplx>());
  }
  return out;
}

double donaldson_derivative(const EquivariantBundle& b, const WeightFunction& v,
                            const MatrixProfile& F, const MatrixProfile& X, const Grid& g) {
  const double c = einstein_constant(b, v);
  const MatrixProfile K = weighted_contraction(curvature_from_relative(b, F, g), v, g);
  Vec s(g.size());
  for (int n = 0; n < g.size(); ++n)
    s[n] = (X.at[n] * K.at[n]).trace().real() - c * X.at[n].trace().real();
  return g.integrate(s);
}

double donaldson_geodesic(const EquivariantBundle& b, const WeightFunction& v,
                          const MatrixProfile& F, const MatrixProfile& X, double t0, double t1,
                          const Grid& g, int quad) {
  const Grid tq(quad);
  double s = 0;
  for (int k = 0; k < quad; ++k) {
    const double t = t0 + (t1 - t0) * tq.nodes()[k];
    s += tq.weights()[k] * donaldson_derivative(b, v, geodesic_point(b, F, X, t, g), X, g);
  }
  return (t1 - t0) * s;
}

DonaldsonEvaluation donaldson_functional(const EquivariantBundle& b, const WeightFunction& v,
                                         const MetricProfile& h_ref,
                                         const std::vector<MetricProfile>& waypoints,
                                         const Grid& g, int quad) {
  DonaldsonEvaluation out;
  MatrixProfile Fa = relative_matrix(b, h_ref, g);
  const Grid tq(quad);
  for (size_t leg = 0; leg < waypoints.size(); ++leg) {
    const MatrixProfile Fb = relative_matrix(b, waypoints[leg], g);
    const MatrixProfile X = log_ratio(b, Fa, Fb, g);
    double s = 0;
    for (int k = 0; k < quad; ++k) {
      const double t = tq.nodes()[k];
      const double d = donaldson_derivative(b, v, geodesic_point(b, Fa, X, t, g), X, g);
      s += tq.weights()[k] * d;
      out.t.push_back(double(leg) + t);
      out.derivative.push_back(d);
    }
    out.legs.push_back(s);
    out.value += s;
    Fa = Fb;
  }
  return out;
}

nlohmann::json DonaldsonEvaluation::to_json() const {
  return {{"value", value}, {"legs", legs}, {"t", t}, {"derivative", derivative}};
}

ConvexitySample geodesic_convexity(const EquivariantBundle& b, const WeightFunction& v,
                                   const MetricProfile& h, const MatrixProfile& X, double T,
                                   int steps, const Grid& g) {
  if (steps < 3) throw ConfigError("geodesic_convexity: need at least 3 steps");
  const MatrixProfile F = relative_matrix(b, h, g);
  const double dt = 2 * T / (steps - 1);
  // M(t_k) relative to M(-T), accumulated leg by leg
  std::vector<double> M(steps, 0.0);
  for (int k = 1; k < steps; ++k) {
    const double t0 = -T + (k - 1) * dt;
    M[k] = M[k - 1] + donaldson_geodesic(b, v, F, X, t0, t0 + dt, g, 16);
  }
  ConvexitySample out;
  out.min = std::numeric_limits<double>::infinity();
  for (int k = 1; k + 1 < steps; ++k) {
    const double d2 = M[k + 1] - 2 * M[k] + M[k - 1];
    out.second_differences.push_back(d2);
    out.min = std::min(out.min, d2);
  }
  return out;
}

UniquenessCheck compare_solutions(const EquivariantBundle& b, const MetricProfile& h1,
                                  const MetricProfile& h2, const Grid& g) {
  const int r = b.rank();
  const MatrixProfile F1 = relative_matrix(b, h1, g), F2 = relative_matrix(b, h2, g);
  MatrixProfile G(g.size(), r);
  CMat mean = CMat::Zero(r, r);
  for (int n = 0; n < g.size(); ++n) {
    G.at[n] = Eigen::PartialPivLU<CMat>(F1.at[n]).solve(F2.at[n]);
    mean += g.weights()[n] * G.at[n];
  }
  UniquenessCheck out;
  const double scale = mean.norm();
  out.scale = (mean.trace() / double(r)).real();
  for (int n = 0; n < g.size(); ++n) {
    out.parallel_defect = std::max(out.parallel_defect, (G.at[n] - mean).norm() / scale);
    const CMat tf = G.at[n] - (G.at[n].trace() / double(r)) * CMat::Identity(r, r);
    out.scalar_defect = std::max(out.scalar_defect, tf.norm() / scale);
  }
  return out;
}

nlohmann::json UniquenessCheck::to_json() const {
  return {{"parallel_defect", parallel_defect},
          {"scalar_defect", scalar_defect},
          {"scale", scale}};
}

}  // namespace whe
