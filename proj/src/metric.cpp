#include "whe/metric.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "whe/errors.hpp"

namespace whe {

CVec MatrixProfile::entry(int i, int j) const {
  CVec e(size());
  for (int m = 0; m < size(); ++m) e[m] = at[m](i, j);
  return e;
}

void MatrixProfile::set_entry(int i, int j, const CVec& e) {
  for (int m = 0; m < size(); ++m) at[m](i, j) = e[m];
}

Vec MatrixProfile::trace_real() const {
  Vec t(size());
  for (int m = 0; m < size(); ++m) t[m] = at[m].trace().real();
  return t;
}

MatrixProfile MatrixProfile::apply(const Mat& op) const {
  MatrixProfile out(size(), rank());
  const Eigen::MatrixXcd D = op.cast<cplx>();
  for (int i = 0; i < rank(); ++i)
    for (int j = 0; j < rank(); ++j) out.set_entry(i, j, D * entry(i, j));
  return out;
}

MatrixProfile MatrixProfile::derivative(const Grid& g) const { return apply(g.diff()); }

MetricProfile reference_metric(const EquivariantBundle& b, const Grid& g) {
  MetricProfile m;
  m.diag.assign(b.rank(), Vec::Ones(g.size()));
  m.offdiag.assign(b.couplings().size(), CVec::Zero(g.size()));
  return m;
}

MetricProfile conformal(const MetricProfile& m, const Vec& u) {
  MetricProfile out = m;
  const Vec e = u.array().exp();
  for (auto& d : out.diag) d = d.cwiseProduct(e);
  for (auto& o : out.offdiag) o = o.cwiseProduct(e.cast<cplx>());
  return out;
}

MatrixProfile relative_matrix(const EquivariantBundle& b, const MetricProfile& m, const Grid& g) {
  const int N = g.size();
  MatrixProfile F(N, b.rank());
  for (int i = 0; i < b.rank(); ++i) F.set_entry(i, i, m.diag.at(i).cast<cplx>());
  for (size_t c = 0; c < b.couplings().size(); ++c) {
    const auto& cp = b.couplings()[c];
    const Vec s2 = coupling_norm_sq(b, cp, g);
    const CVec& bc = m.offdiag.at(c);
    F.set_entry(cp.to, cp.from, bc);
    F.set_entry(cp.from, cp.to, bc.conjugate().cwiseProduct(s2.cast<cplx>()));
  }
  return F;
}

MetricProfile metric_from_relative(const EquivariantBundle& b, const MatrixProfile& F) {
  MetricProfile m;
  for (int i = 0; i < b.rank(); ++i) m.diag.push_back(F.entry(i, i).real());
  for (const auto& cp : b.couplings()) m.offdiag.push_back(F.entry(cp.to, cp.from));
  return m;
}

Mat frame_ratio(const EquivariantBundle& b, double mu) {
  const int r = b.rank();
  Mat R(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) {
      const auto& si = b.summand(i);
      const auto& sj = b.summand(j);
      R(i, j) = std::pow(mu, 0.5 * (sj.w0 - si.w0)) * std::pow(1.0 - mu, 0.5 * (si.w1 - sj.w1));
    }
  return R;
}

namespace {

CMat hat(const CMat& A, const Mat& R) { return A.cwiseProduct(R.cast<cplx>()); }

}  // namespace

void check_positive(const EquivariantBundle& b, const MetricProfile& m, const Grid& g) {
  const MatrixProfile F = relative_matrix(b, m, g);
  for (int n = 0; n < g.size(); ++n) {
    const CMat Fh = hat(F.at[n], frame_ratio(b, g.nodes()[n]));
    Eigen::LLT<CMat> llt(0.5 * (Fh + Fh.adjoint()));
    if (llt.info() != Eigen::Success || !Fh.allFinite()) {
      std::ostringstream os;
      os << "metric is not positive definite at mu=" << g.nodes()[n];
      throw NonPositiveMetric(os.str());
    }
  }
}

MatrixProfile to_unitary(const EquivariantBundle& b, const MetricProfile& m, const Grid& g,
                         const MatrixProfile& A) {
  const MatrixProfile F = relative_matrix(b, m, g);
  MatrixProfile out(g.size(), b.rank());
  for (int n = 0; n < g.size(); ++n) {
    const Mat R = frame_ratio(b, g.nodes()[n]);
    const CMat Fh = hat(F.at[n], R);
    Eigen::LLT<CMat> llt(0.5 * (Fh + Fh.adjoint()));
    if (llt.info() != Eigen::Success) throw NonPositiveMetric("to_unitary: metric not positive");
    const CMat C = llt.matrixU();
    const CMat Ah = hat(A.at[n], R);
    CMat U = C * Ah * C.inverse();
    out.at[n] = 0.5 * (U + U.adjoint());
  }
  return out;
}

CurvaturePackage curvature_from_relative(const EquivariantBundle& b, const MatrixProfile& F,
                                         const Grid& g) {
  const int N = g.size(), r = b.rank();
  const MatrixProfile F1 = F.derivative(g);
  CurvaturePackage pkg{MatrixProfile(N, r), MatrixProfile(N, r)};
  // phi = F^{-1} P F - sigma F^{-1} F'; rho = phi' with the sigma part
  // differentiated exactly.
  MatrixProfile smooth(N, r), flux(N, r);
  for (int n = 0; n < N; ++n) {
    const double mu = g.nodes()[n];
    CMat P = CMat::Zero(r, r);
    for (int i = 0; i < r; ++i) P(i, i) = b.summand(i).w0 + b.summand(i).degree * mu;
    const CMat Fi = Eigen::PartialPivLU<CMat>(F.at[n]).inverse();
    smooth.at[n] = Fi * P * F.at[n];
    flux.at[n] = -Fi * F1.at[n];
    pkg.phi.at[n] = smooth.at[n] + g.sigma()[n] * flux.at[n];
  }
  const MatrixProfile ds = smooth.derivative(g);
  const MatrixProfile df = flux.apply(g.sigma_diff());
  for (int n = 0; n < N; ++n) pkg.rho.at[n] = ds.at[n] + df.at[n];
  return pkg;
}

CurvaturePackage curvature_package(const EquivariantBundle& b, const MetricProfile& m,
                                   const Grid& g) {
  check_positive(b, m, g);
  return curvature_from_relative(b, relative_matrix(b, m, g), g);
}

MatrixProfile weighted_contraction(const CurvaturePackage& pkg, const WeightFunction& v,
                                   const Grid& g) {
  MatrixProfile K(pkg.rho.size(), pkg.rho.rank());
  for (int n = 0; n < K.size(); ++n) {
    const double mu = g.nodes()[n];
    K.at[n] = v.value(mu) * pkg.rho.at[n] + v.grad(mu) * pkg.phi.at[n];
  }
  return K;
}

Mat weighted_laplacian_matrix(const WeightFunction& v, const Grid& g) {
  return -2.0 * std::numbers::pi * g.sigma_diff() * v.values(g).asDiagonal() * g.diff();
}

Vec weighted_laplacian(const WeightFunction& v, const Vec& f, const Grid& g) {
  return -2.0 * std::numbers::pi * g.sigma_diff() * v.values(g).cwiseProduct(g.derivative(f));
}

double weighted_atiyah_bott_pairing(const WeightFunction& v, const OneFormProfile& a,
                                    const OneFormProfile& b, const Grid& g) {
  // -(1/8 pi^2) int v tr(a ^ b); the angular integral contributes 2 pi.
  Vec integrand(g.size());
  for (int n = 0; n < g.size(); ++n) {
    const cplx t = (a.dmu.at[n] * b.dtheta.at[n] - a.dtheta.at[n] * b.dmu.at[n]).trace();
    integrand[n] = v.value(g.nodes()[n]) * t.real();
  }
  return -g.integrate(integrand) / (4.0 * std::numbers::pi);
}

}  // namespace whe
