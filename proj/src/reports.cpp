#include "whe/reports.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "whe/errors.hpp"
#include "whe/intersections.hpp"

namespace whe {

namespace {

constexpr double kPi = std::numbers::pi;

CMat trace_free(const CMat& A) {
  const int r = static_cast<int>(A.rows());
  return A - (A.trace() / double(r)) * CMat::Identity(r, r);
}

double sup_spectral(const MatrixProfile& U) {
  double s = 0;
  for (const auto& m : U.at) {
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    s = std::max(s, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return s;
}

MatrixProfile trace_free(const MatrixProfile& P) {
  MatrixProfile out = P;
  for (auto& m : out.at) m = trace_free(m);
  return out;
}

}  // namespace

LubkeReport lubke_report(const EquivariantBundle& b, const MetricProfile& h,
                         const WeightFunction& v, const Grid& g, int n, double tau,
                         double flat_tol) {
  const HessianCheck hc = hessian_condition_check(v, n, g);
  if (!hc.holds) {
    std::ostringstream os;
    os << "weight " << v.describe() << " violates the Hessian condition in dimension " << n
       << " (max margin " << hc.max_margin << ")";
    throw PreconditionWeight(os.str());
  }
  const int r = b.rank();
  const CharSquares cs = char_square_numbers(b, h, v, g);
  LubkeReport out;
  out.hessian_margin = hc.max_margin;
  out.tau = tau;
  out.lhs = (r - 1) * cs.c1sq;
  out.rhs = 2.0 * r * cs.c2;
  out.gap = out.rhs - out.lhs;
  out.holds = out.gap >= -tau;
  out.equality = std::abs(out.gap) <= tau;
  const auto pkg = curvature_package(b, h, g);
  out.tracefree_rho = sup_spectral(trace_free(to_unitary(b, h, g, pkg.rho)));
  out.tracefree_phi = sup_spectral(trace_free(to_unitary(b, h, g, pkg.phi)));
  out.projectively_flat = out.tracefree_rho < flat_tol && out.tracefree_phi < flat_tol;
  out.residual = whe_residual(b, h, v, g);
  return out;
}

nlohmann::json LubkeReport::to_json() const {
  return {{"lhs", lhs},
          {"rhs", rhs},
          {"gap", gap},
          {"tau", tau},
          {"holds", holds},
          {"equality", equality},
          {"tracefree_rho_sup", tracefree_rho},
          {"tracefree_phi_sup", tracefree_phi},
          {"projectively_flat", projectively_flat},
          {"metric_residual", residual},
          {"hessian_margin", hessian_margin}};
}

YangMillsReport yang_mills_report(const EquivariantBundle& b, const MetricProfile& h,
                                  const WeightFunction& v, const Grid& g) {
  if (v.family() != WeightFamily::exponential && v.family() != WeightFamily::constant)
    throw WrongFamily("Yang-Mills identity needs an exponential weight, got " + v.describe());
  const int r = b.rank();
  const auto pkg = curvature_package(b, h, g);
  const MatrixProfile K = weighted_contraction(pkg, v, g);
  const Vec vv = v.values(g);
  Vec e1(g.size()), e2(g.size());
  for (int m = 0; m < g.size(); ++m) {
    const CMat k0 = trace_free(K.at[m]);
    const CMat r0 = trace_free(pkg.rho.at[m]);
    e1[m] = (k0 * k0).trace().real() / vv[m];
    e2[m] = vv[m] * (r0 * r0).trace().real();
  }
  YangMillsReport out;
  out.rank = r;
  out.tracefree_energy = g.integrate(e1);
  out.delta = boundary_c1sq(b, v) - 2.0 * r * boundary_ch2(b, v);
  out.ym = 4 * kPi * kPi * g.integrate(e2);
  out.identity_residual = std::abs(out.tracefree_energy + out.delta / r - g.integrate(e2));
  out.lower_bound = 4 * kPi * kPi * out.delta / r;
  out.bound_gap = out.ym - out.lower_bound;
  return out;
}

nlohmann::json YangMillsReport::to_json() const {
  return {{"tracefree_energy", tracefree_energy},
          {"delta", delta},
          {"yang_mills", ym},
          {"identity_residual", identity_residual},
          {"lower_bound", lower_bound},
          {"bound_gap", bound_gap},
          {"rank", rank}};
}

VortexResult vortex_residual(const EquivariantBundle& b, const MetricProfile& h,
                             const WeightFunction& v, const WeightFunction& w,
                             const std::vector<CVec>& section, double tau, const Grid& g,
                             double area) {
  const int N = g.size(), r = b.rank();
  if (static_cast<int>(section.size()) != r) throw ConfigError("vortex: one profile per summand");
  for (const auto& s : section)
    if (s.size() != N) throw ConfigError("vortex: section profile has the wrong length");
  if (!(area > 0)) throw ConfigError("vortex: area must be positive");

  VortexResult out;
  // Invariant holomorphic sections are constants on summands whose lift
  // weights straddle zero.
  out.holomorphic_defect = 0;
  const Mat& D = g.diff();
  for (int i = 0; i < r; ++i) {
    const auto& l = b.summand(i);
    const double amp = section[i].cwiseAbs().maxCoeff();
    if (amp == 0) continue;
    if (l.w0 > 0 || l.w1 < 0)
      out.holomorphic_defect = std::max(out.holomorphic_defect, amp);
    const CVec ds = D.cast<cplx>() * section[i];
    out.holomorphic_defect = std::max(out.holomorphic_defect, ds.cwiseAbs().maxCoeff());
  }
  out.holomorphic = out.holomorphic_defect < 1e-8;

  const MatrixProfile K = weighted_contraction(curvature_package(b, h, g), v, g);
  const MatrixProfile KU = to_unitary(b, h, g, K);
  const MatrixProfile F = relative_matrix(b, h, g);
  out.residual = MatrixProfile(N, r);
  for (int m = 0; m < N; ++m) {
    const double mu = g.nodes()[m];
    const double lw = w.hess(mu) / w.value(mu) - std::pow(w.grad(mu) / w.value(mu), 2);
    const Mat R = frame_ratio(b, mu);
    const CMat Fh = F.at[m].cwiseProduct(R.cast<cplx>());
    Eigen::LLT<CMat> llt(0.5 * (Fh + Fh.adjoint()));
    if (llt.info() != Eigen::Success) throw NonPositiveMetric("vortex: metric not positive");
    const CMat C = llt.matrixU();
    // reference norm of the invariant frame vector of summand i
    CVec c(r);
    for (int i = 0; i < r; ++i) {
      const auto& l = b.summand(i);
      c[i] = section[i][m] * std::sqrt(std::pow(mu, -l.w0) * std::pow(1.0 - mu, l.w1));
    }
    const CVec u = C * c;
    const CMat coupling = lw * (u * u.adjoint());
    out.coupling_sup = std::max(out.coupling_sup, coupling.norm() > 0
                                                      ? Eigen::SelfAdjointEigenSolver<CMat>(
                                                            coupling, Eigen::EigenvaluesOnly)
                                                            .eigenvalues()
                                                            .cwiseAbs()
                                                            .maxCoeff()
                                                      : 0.0);
    out.residual.at[m] = (2 * kPi / (v.value(mu) * area)) * KU.at[m] - coupling -
                         tau * CMat::Identity(r, r);
  }
  out.sup = sup_spectral(out.residual);
  return out;
}

nlohmann::json VortexResult::to_json() const {
  return {{"residual_sup", sup},
          {"coupling_sup", coupling_sup},
          {"holomorphic", holomorphic},
          {"holomorphic_defect", holomorphic_defect}};
}

double prescribed_extension_gamma(int n) {
  // gamma^2 = 2 pi/(n+1) (e^{c1})(0) / c1^[n]; at the zero vector field the
  // two classes agree.
  return std::sqrt(2 * kPi / (n + 1));
}

ExtensionSolitonReport extension_soliton_check(double gamma, const Grid& g) {
  // Round sphere with omega in c1(X): area 2, Kaehler density in the chart
  // coordinate (1-mu)^2/pi. Tangent bundle O(2) with lifts (-1,1), extended
  // by the trivial line; at the zero vector field u = f = 0.
  const int N = g.size();
  const double area = 2.0;
  const EquivariantBundle TX({EquivariantLineBundle::make(2, -1, 1)}, {});
  const EquivariantBundle O({EquivariantLineBundle::make(0, 0, 0)}, {});
  const Vec zero = Vec::Zero(N);
  const MetricProfile hTX = conformal(reference_metric(TX, g), Vec::Constant(N, -std::log(kPi)));
  const MetricProfile hO = reference_metric(O, g);

  const auto pTX = curvature_package(TX, hTX, g);
  const auto pO = curvature_package(O, hO, g);

  ExtensionSolitonReport out;
  out.gamma = gamma;
  const double g2 = gamma * gamma;
  Vec dens(N), htx(N), ho(N), coef(N);
  for (int m = 0; m < N; ++m) {
    const double mu = g.nodes()[m];
    dens[m] = (1 - mu) * (1 - mu) / kPi;
    // |d/dz|^2 from the invariant frame: z e, |z|^2 = mu/(1-mu)
    htx[m] = hTX.diag[0][m] * mu * (1 - mu) * (1 - mu) / mu;
    ho[m] = hO.diag[0][m];
    coef[m] = dens[m];  // Psi(d/dz) = i g_{z zbar} dzbar
  }
  out.ke_defect = (htx - dens).cwiseAbs().maxCoeff();

  // pointwise |Psi|^2 = |coef|^2 |dzbar|^2_omega |dz|^2_{h_TX^*} h_O
  const Vec norm2 = coef.array().square() / (dens.array() * htx.array()) * ho.array();
  // (1,0)-covariant derivative a' - a (log H)' = H (a/H)', H = h_TX/h_O, up to
  // the chart factor dmu/dz
  const Vec H = htx.cwiseQuotient(ho);
  const Vec cov = H.cwiseProduct(g.derivative(coef.cwiseQuotient(H)));
  out.offdiag_residual = std::abs(gamma) * cov.cwiseAbs().maxCoeff();

  Vec trace(N);
  out.residual = 0;
  const double t_tx = 1 - g2 / (2 * kPi), t_o = g2 / (2 * kPi);
  for (int m = 0; m < N; ++m) {
    // (i/2pi) Lambda(-Psi^dag ^ Psi) = -(1/2pi)|Psi|^2 on TX, +(n/2pi)|Psi|^2 on O
    const double blk_tx = pTX.rho.at[m](0, 0).real() / area - g2 / (2 * kPi) * norm2[m];
    const double blk_o = pO.rho.at[m](0, 0).real() / area + g2 / (2 * kPi) * norm2[m];
    out.residual = std::max({out.residual, std::abs(blk_tx - t_tx), std::abs(blk_o - t_o)});
    trace[m] = blk_tx + blk_o;
  }
  out.residual = std::max(out.residual, out.offdiag_residual);
  out.trace_integral = area * g.integrate(trace);
  out.degree_tangent = 2;
  const EquivariantBundle E({EquivariantLineBundle::make(2, -1, 1), EquivariantLineBundle::make(0, 0, 0)},
                            {});
  out.slope = weighted_slope(E, constant_weight(1.0));
  // (n/(n+1)) (e^{c1})(0) with (e^{c1})(0) = c1^[1] = area
  out.slope_expected = 0.5 * area;
  return out;
}

nlohmann::json ExtensionSolitonReport::to_json() const {
  return {{"gamma", gamma},
          {"residual", residual},
          {"offdiag_residual", offdiag_residual},
          {"ke_defect", ke_defect},
          {"trace_integral", trace_integral},
          {"degree_tangent", degree_tangent},
          {"slope", slope},
          {"slope_expected", slope_expected}};
}

}  // namespace whe
