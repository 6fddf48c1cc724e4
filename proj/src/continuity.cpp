#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rng.hpp"
#include "whe/errors.hpp"
#include "whe/intersections.hpp"
#include "whe/solver.hpp"

namespace whe {

std::string status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::destabilized: return "destabilized";
    case SolveStatus::budget_exhausted: return "budget_exhausted";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  if (grid < 8) throw ConfigError("solver: grid must be >= 8");
  if (!(newton_tol > 0) || !(converged_tol > 0)) throw ConfigError("solver: tolerances must be > 0");
  if (!(eps_start > 0 && eps_start <= 1)) throw ConfigError("solver: eps_start must lie in (0,1]");
  if (!(eps_ratio > 0 && eps_ratio < 1)) throw ConfigError("solver: eps_ratio must lie in (0,1)");
  if (!(eps_floor > 0 && eps_floor < eps_start)) throw ConfigError("solver: bad eps_floor");
  if (!(blowup > 0)) throw ConfigError("solver: blowup threshold must be > 0");
  if (max_steps < 1 || max_newton < 1) throw ConfigError("solver: iteration budgets must be >= 1");
  if (initial != "reference" && initial != "random")
    throw ConfigError("solver: initial must be \"reference\" or \"random\"");
}

nlohmann::json SolverConfig::to_json() const {
  return {{"grid", grid},           {"newton_tol", newton_tol}, {"converged_tol", converged_tol},
          {"eps_start", eps_start}, {"eps_ratio", eps_ratio},   {"eps_floor", eps_floor},
          {"blowup", blowup},       {"max_steps", max_steps},   {"max_newton", max_newton},
          {"polish_eps", polish_eps}, {"polish_prox", polish_prox}, {"initial", initial},
          {"initial_amplitude", initial_amplitude}, {"seed", seed}};
}

SolverConfig solver_config_from_json(const nlohmann::json& j, SolverConfig c) {
  if (j.is_null()) return c;
  if (!j.is_object()) throw ConfigError("solver config must be an object");
  auto get = [&](const char* k, auto& dst) {
    if (j.contains(k)) dst = j.at(k).get<std::decay_t<decltype(dst)>>();
  };
  get("grid", c.grid);
  get("newton_tol", c.newton_tol);
  get("converged_tol", c.converged_tol);
  get("eps_start", c.eps_start);
  get("eps_ratio", c.eps_ratio);
  get("eps_floor", c.eps_floor);
  get("blowup", c.blowup);
  get("max_steps", c.max_steps);
  get("max_newton", c.max_newton);
  get("polish_eps", c.polish_eps);
  get("polish_prox", c.polish_prox);
  get("initial", c.initial);
  get("initial_amplitude", c.initial_amplitude);
  get("seed", c.seed);
  c.validate();
  return c;
}

namespace {

Mat sub(const Mat& A, const std::vector<int>& I) {
  const int s = static_cast<int>(I.size());
  Mat B(s, s);
  for (int a = 0; a < s; ++a)
    for (int c = 0; c < s; ++c) B(a, c) = A(I[a], I[c]);
  return B;
}

std::vector<Mat> to_real(const MatrixProfile& P, const char* what) {
  std::vector<Mat> out;
  for (const auto& m : P.at) {
    if (m.imag().cwiseAbs().maxCoeff() > 1e-12 * (1 + m.real().cwiseAbs().maxCoeff()))
      throw ConfigError(std::string(what) + ": the solver works with real coefficients");
    out.push_back(m.real());
  }
  return out;
}

// exp of an h-self-adjoint invariant-frame endomorphism A, h given by F.
Mat exp_self_adjoint(const Mat& F, const Mat& A, const Mat& R) {
  Eigen::LLT<Mat> llt(F.cwiseProduct(R));
  if (llt.info() != Eigen::Success) throw NonPositiveMetric("exp: metric not positive");
  const Mat C = llt.matrixU();
  const Mat Ci = C.inverse();
  Mat Ah = C * A.cwiseProduct(R) * Ci;
  Ah = 0.5 * (Ah + Ah.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(Ah);
  const Mat E = es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() *
                es.eigenvectors().transpose();
  return (Ci * E * C).cwiseQuotient(R);
}

double psi(double d) { return std::abs(d) < 1e-8 ? 1.0 + 0.5 * d : std::expm1(d) / d; }

struct BlockData {
  std::vector<int> idx;
  std::vector<Mat> C, Ci, R, S0, Phi0;
};

class Engine {
 public:
  Engine(const EquivariantBundle& b, const WeightFunction& v, const Grid& g,
         std::vector<Mat> F0)
      : b_(b), v_(v), g_(g), F0_(std::move(F0)) {
    N_ = g.size();
    r_ = b.rank();
    vv_ = v.values(g);
    D_ = g.diff();
    lap_ = -g.sigma_diff() * vv_.asDiagonal() * D_;

    // Rescale the background so that tr K matches r * c in this discretization;
    // c itself is taken from the discrete integral, which no f can change.
    // moment map of the background = S + sigma * Phi
    std::vector<Mat> S0(N_), Phi0(N_);
    auto moment = [&] {
      const std::vector<Mat> dF = derivative(F0_, r_);
      for (int n = 0; n < N_; ++n) {
        Mat P = Mat::Zero(r_, r_);
        for (int i = 0; i < r_; ++i)
          P(i, i) = b.summand(i).w0 + b.summand(i).degree * g.nodes()[n];
        const Mat Fi = F0_[n].inverse();
        S0[n] = Fi * P * F0_[n];
        Phi0[n] = -Fi * dF[n];
      }
    };
    moment();
    Vec trS(N_), trPhi(N_);
    for (int n = 0; n < N_; ++n) {
      trS[n] = vv_[n] * S0[n].trace();
      trPhi[n] = vv_[n] * Phi0[n].trace();
    }
    const Vec trK = D_ * trS + g.sigma_diff() * trPhi;
    c_ = g.integrate(trK) / r_;
    const Vec q = 2.0 * std::numbers::pi * (Vec::Constant(N_, c_) - trK / r_);
    shift_ = weighted_laplace_solve(v, q, g, 1e-6);
    for (int n = 0; n < N_; ++n) F0_[n] *= std::exp(shift_[n]);
    moment();

    for (const auto& I : b.blocks()) {
      BlockData bd;
      bd.idx = I;
      for (int n = 0; n < N_; ++n) {
        const Mat R = sub(frame_ratio(b, g.nodes()[n]), I);
        Eigen::LLT<Mat> llt(sub(F0_[n], I).cwiseProduct(R));
        if (llt.info() != Eigen::Success) throw NonPositiveMetric("background metric not positive");
        const Mat C = llt.matrixU();
        bd.C.push_back(C);
        bd.Ci.push_back(C.inverse());
        bd.R.push_back(R);
        bd.S0.push_back(sub(S0[n], I));
        bd.Phi0.push_back(sub(Phi0[n], I));
      }
      blocks_.push_back(std::move(bd));
    }
  }

  int nodes() const { return N_; }
  int rank() const { return r_; }
  int nblocks() const { return static_cast<int>(blocks_.size()); }
  double einstein() const { return c_; }
  const std::vector<Mat>& background() const { return F0_; }
  // Conformal factor applied to the background in the constructor.
  const Vec& shift() const { return shift_; }

  int unknowns(int bi) const {
    const int s = static_cast<int>(blocks_[bi].idx.size());
    return N_ * s * (s + 1) / 2;
  }

  Vec pack(int bi, const std::vector<Mat>& X) const {
    const auto& I = blocks_[bi].idx;
    const int s = static_cast<int>(I.size());
    Vec x(unknowns(bi));
    int k = 0;
    for (int n = 0; n < N_; ++n)
      for (int a = 0; a < s; ++a)
        for (int c = a; c < s; ++c) x[k++] = X[n](I[a], I[c]);
    return x;
  }

  void unpack(int bi, const Vec& x, std::vector<Mat>& X) const {
    const auto& I = blocks_[bi].idx;
    const int s = static_cast<int>(I.size());
    int k = 0;
    for (int n = 0; n < N_; ++n)
      for (int a = 0; a < s; ++a)
        for (int c = a; c < s; ++c) {
          X[n](I[a], I[c]) = x[k];
          X[n](I[c], I[a]) = x[k];
          ++k;
        }
  }

  // L_eps in the h-unitary frame, packed like the unknowns. Optionally the
  // pointwise Frobenius norms.
  Vec block_residual(int bi, const std::vector<Mat>& X, double eps, Vec* frob = nullptr) const {
    const BlockData& B = blocks_[bi];
    const int s = static_cast<int>(B.idx.size());
    std::vector<Mat> T(N_), Ti(N_), Xe(N_);
    std::vector<Vec> lam(N_);
    for (int n = 0; n < N_; ++n) {
      const Mat Xb = sub(X[n], B.idx);
      Mat Q;
      if (s == 1) {
        Q = Mat::Ones(1, 1);
        lam[n] = Xb.col(0);
      } else {
        Eigen::SelfAdjointEigenSolver<Mat> es(Xb);
        Q = es.eigenvectors();
        lam[n] = es.eigenvalues();
      }
      T[n] = Q.transpose() * B.C[n];
      Ti[n] = B.Ci[n] * Q;
      Xe[n] = (B.Ci[n] * Xb * B.C[n]).cwiseQuotient(B.R[n]);
    }
    const std::vector<Mat> Xmu = derivative(Xe, s);
    // v*phi = smooth part + sigma * flux part; the latter is differentiated
    // through sigma_diff so the discrete operator keeps a one-dimensional kernel.
    std::vector<Mat> vphi(N_), vflux(N_);
    for (int n = 0; n < N_; ++n) {
      const Mat Xm = T[n] * Xmu[n].cwiseProduct(B.R[n]) * Ti[n];
      const Mat P0 = T[n] * B.S0[n].cwiseProduct(B.R[n]) * Ti[n];
      const Mat Q0 = T[n] * B.Phi0[n].cwiseProduct(B.R[n]) * Ti[n];
      Mat pe(s, s), pf(s, s);
      for (int a = 0; a < s; ++a)
        for (int c = 0; c < s; ++c) {
          const double d = lam[n][c] - lam[n][a];
          pe(a, c) = std::exp(d) * P0(a, c);
          pf(a, c) = std::exp(d) * Q0(a, c) - psi(d) * Xm(a, c);
        }
      vphi[n] = vv_[n] * (Ti[n] * pe * T[n]).cwiseQuotient(B.R[n]);
      vflux[n] = vv_[n] * (Ti[n] * pf * T[n]).cwiseQuotient(B.R[n]);
    }
    std::vector<Mat> K = derivative(vphi, s);
    const std::vector<Mat> Kf = derivative(vflux, s, &g_.sigma_diff());
    for (int n = 0; n < N_; ++n) K[n] += Kf[n];
    Vec out(unknowns(bi));
    if (frob) frob->resize(N_);
    int k = 0;
    for (int n = 0; n < N_; ++n) {
      const Mat L = K[n] - c_ * Mat::Identity(s, s) + eps * Xe[n];
      const Mat Le = T[n] * L.cwiseProduct(B.R[n]) * Ti[n];
      Mat Lp(s, s);
      for (int a = 0; a < s; ++a)
        for (int c = 0; c < s; ++c) Lp(a, c) = std::exp(0.5 * (lam[n][a] - lam[n][c])) * Le(a, c);
      Lp = 0.5 * (Lp + Lp.transpose());
      if (frob) (*frob)[n] = Lp.squaredNorm();
      for (int a = 0; a < s; ++a)
        for (int c = a; c < s; ++c) out[k++] = Lp(a, c);
    }
    return out;
  }

  Mat block_jacobian(int bi, std::vector<Mat> X, double eps) const {
    const int s = static_cast<int>(blocks_[bi].idx.size());
    if (s == 1) return lap_ + eps * Mat::Identity(N_, N_);
    const Vec x0 = pack(bi, X);
    const Vec r0 = block_residual(bi, X, eps);
    const int m = static_cast<int>(x0.size());
    Mat J(m, m);
    for (int j = 0; j < m; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(x0[j]));
      Vec x = x0;
      x[j] += h;
      unpack(bi, x, X);
      J.col(j) = (block_residual(bi, X, eps) - r0) / h;
    }
    unpack(bi, x0, X);
    return J;
  }

  // Damped Newton on one block; prox > 0 gives the proximal variant.
  // Iterates towards 0.1 * tol; success means ending below tol.
  bool newton_block(int bi, std::vector<Mat>& X, double eps, double prox, double tol,
                    int maxit) const {
    const double target = 0.1 * tol;
    Vec x = pack(bi, X);
    Vec r = block_residual(bi, X, eps);
    double nrm = r.cwiseAbs().maxCoeff();
    for (int it = 0; it < maxit; ++it) {
      if (nrm < target) return true;
      Mat J = block_jacobian(bi, X, eps);
      if (prox > 0) J += prox * Mat::Identity(J.rows(), J.cols());
      const Vec dx = J.partialPivLu().solve(-r);
      if (!dx.allFinite()) return false;
      double alpha = 1;
      bool accepted = false;
      for (int ls = 0; ls < 12; ++ls, alpha *= 0.5) {
        const Vec xt = x + alpha * dx;
        unpack(bi, xt, X);
        const Vec rt = block_residual(bi, X, eps);
        const double nt = rt.allFinite() ? rt.cwiseAbs().maxCoeff() : INFINITY;
        if (nt < (1 - 1e-4 * alpha) * nrm) {
          x = xt;
          r = rt;
          nrm = nt;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        unpack(bi, x, X);
        return nrm < tol;
      }
    }
    return nrm < tol;
  }

  void project_trace(std::vector<Mat>& X) const {
    for (auto& m : X) m -= (m.trace() / r_) * Mat::Identity(r_, r_);
  }

  // The trace equation has no source, so tr log f stays at round-off level;
  // project it out only when it has drifted and then re-solve.
  bool newton_all(std::vector<Mat>& X, double eps, double prox, double tol, int maxit) const {
    for (int pass = 0; pass < 2; ++pass) {
      for (int bi = 0; bi < nblocks(); ++bi)
        if (!newton_block(bi, X, eps, prox, tol, maxit)) return false;
      double t = 0;
      for (const auto& m : X) t = std::max(t, std::abs(m.trace()));
      if (t < 1e-9) break;
      project_trace(X);
    }
    return residual_sup(X, eps) < tol;
  }

  double residual_sup(const std::vector<Mat>& X, double eps, double* l2 = nullptr) const {
    double s = 0;
    Vec total = Vec::Zero(N_);
    for (int bi = 0; bi < nblocks(); ++bi) {
      Vec fr;
      const Vec r = block_residual(bi, X, eps, &fr);
      s = std::max(s, r.cwiseAbs().maxCoeff());
      total += fr;
    }
    if (l2) *l2 = std::sqrt(g_.integrate(total));
    return s;
  }

  // f in the invariant frame for a given unitary-frame log.
  std::vector<Mat> endomorphism(const std::vector<Mat>& X) const {
    std::vector<Mat> f(N_, Mat::Zero(r_, r_));
    for (const auto& B : blocks_) {
      const int s = static_cast<int>(B.idx.size());
      for (int n = 0; n < N_; ++n) {
        Eigen::SelfAdjointEigenSolver<Mat> es(sub(X[n], B.idx));
        const Mat E = es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() *
                      es.eigenvectors().transpose();
        const Mat fb = (B.Ci[n] * E * B.C[n]).cwiseQuotient(B.R[n]);
        for (int a = 0; a < s; ++a)
          for (int c = 0; c < s; ++c) f[n](B.idx[a], B.idx[c]) = fb(a, c);
      }
    }
    return f;
  }

  MetricProfile metric(const std::vector<Mat>& X) const {
    const auto f = endomorphism(X);
    MatrixProfile F(N_, r_);
    for (int n = 0; n < N_; ++n) F.at[n] = (F0_[n] * f[n]).cast<cplx>();
    return metric_from_relative(b_, F);
  }

  // Largest spectral norm of L_0 at X = 0, i.e. of K^0 of the background.
  double k0_max() const {
    std::vector<Mat> Z(N_, Mat::Zero(r_, r_));
    double k = 0;
    for (int bi = 0; bi < nblocks(); ++bi) {
      const BlockData& B = blocks_[bi];
      const int s = static_cast<int>(B.idx.size());
      const Vec r = block_residual(bi, Z, 0.0);
      int p = 0;
      for (int n = 0; n < N_; ++n) {
        Mat L(s, s);
        for (int a = 0; a < s; ++a)
          for (int c = a; c < s; ++c) L(a, c) = L(c, a) = r[p++];
        Eigen::SelfAdjointEigenSolver<Mat> es(L, Eigen::EigenvaluesOnly);
        k = std::max(k, es.eigenvalues().cwiseAbs().maxCoeff());
      }
    }
    return k;
  }

  ContinuityState state(const std::vector<Mat>& X, double eps, double k0) const {
    ContinuityState st;
    st.epsilon = eps;
    st.residual = residual_sup(X, eps, &st.residual_l2);
    st.k0_max = k0;
    const auto f = endomorphism(X);
    for (int n = 0; n < N_; ++n) {
      st.det_error = std::max(st.det_error, std::abs(f[n].determinant() - 1.0));
      Eigen::SelfAdjointEigenSolver<Mat> es(X[n], Eigen::EigenvaluesOnly);
      st.m_eps = std::max(st.m_eps, es.eigenvalues().cwiseAbs().maxCoeff());
    }
    st.det_ok = st.det_error < 1e-9;
    st.bound_ok = st.m_eps <= k0 / eps + 1e-6;
    return st;
  }

  std::optional<Projector> extract(const std::vector<Mat>& X) const {
    std::vector<int> ranks;
    std::vector<double> gaps;
    std::vector<std::vector<double>> overlaps;
    std::vector<Mat> Cfull(N_, Mat::Identity(r_, r_)), Cifull(N_, Mat::Identity(r_, r_));
    for (const auto& B : blocks_)
      for (int n = 0; n < N_; ++n)
        for (size_t a = 0; a < B.idx.size(); ++a)
          for (size_t c = 0; c < B.idx.size(); ++c) {
            Cfull[n](B.idx[a], B.idx[c]) = B.C[n](a, c);
            Cifull[n](B.idx[a], B.idx[c]) = B.Ci[n](a, c);
          }
    for (int n = 0; n < N_; ++n) {
      Eigen::SelfAdjointEigenSolver<Mat> es(X[n]);
      const Vec lam = es.eigenvalues();
      const double spread = lam[r_ - 1] - lam[0];
      int k = 0;
      double gap = 0;
      for (int i = 0; i + 1 < r_; ++i)
        if (lam[i + 1] - lam[i] > std::max(1.0, 0.1 * spread)) {
          k = i + 1;
          gap = lam[i + 1] - lam[i];
          break;
        }
      ranks.push_back(k);
      gaps.push_back(gap);
      if (k == 0) {
        overlaps.emplace_back();
        continue;
      }
      Mat U(r_, k);
      for (int j = 0; j < k; ++j) U.col(j) = Cifull[n] * es.eigenvectors().col(j);
      const Mat Qb = Eigen::HouseholderQR<Mat>(U).householderQ() * Mat::Identity(r_, k);
      std::vector<double> ov(r_);
      for (int i = 0; i < r_; ++i) ov[i] = Qb.row(i).squaredNorm();
      overlaps.push_back(ov);
    }
    std::vector<int> sr = ranks;
    std::nth_element(sr.begin(), sr.begin() + N_ / 2, sr.end());
    const int k = sr[N_ / 2];
    if (k == 0) return std::nullopt;
    Projector p;
    p.rank = k;
    std::vector<double> gsel;
    for (int i = 0; i < r_; ++i) {
      std::vector<double> vals;
      for (int n = 0; n < N_; ++n)
        if (ranks[n] == k) vals.push_back(overlaps[n][i]);
      std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
      p.overlaps.push_back(vals[vals.size() / 2]);
      if (p.overlaps.back() > 0.5) p.image.push_back(i);
    }
    for (int n = 0; n < N_; ++n)
      if (ranks[n] == k) gsel.push_back(gaps[n]);
    std::nth_element(gsel.begin(), gsel.begin() + gsel.size() / 2, gsel.end());
    p.gap = gsel[gsel.size() / 2];
    p.bundle_slope = weighted_slope(b_, v_);
    if (!p.image.empty()) p.slope = weighted_slope(b_.restrict_to(p.image), v_);
    return p;
  }

 private:
  std::vector<Mat> derivative(const std::vector<Mat>& P, int s, const Mat* op = nullptr) const {
    const Mat& Dm = op ? *op : D_;
    std::vector<Mat> out(N_, Mat(s, s));
    Vec e(N_);
    for (int a = 0; a < s; ++a)
      for (int c = 0; c < s; ++c) {
        for (int n = 0; n < N_; ++n) e[n] = P[n](a, c);
        const Vec d = Dm * e;
        for (int n = 0; n < N_; ++n) out[n](a, c) = d[n];
      }
    return out;
  }

  const EquivariantBundle& b_;
  WeightFunction v_;
  Grid g_;
  std::vector<Mat> F0_;
  int N_ = 0, r_ = 0;
  double c_ = 0;
  Vec vv_;
  Mat D_, lap_;
  Vec shift_;
  std::vector<BlockData> blocks_;
};

void require_cliques(const EquivariantBundle& b) {
  for (const auto& I : b.blocks())
    for (size_t a = 0; a < I.size(); ++a)
      for (size_t c = a + 1; c < I.size(); ++c)
        if (!b.coupling_between(I[a], I[c]))
          throw UnsupportedCoupling(
              "solver: every connected group of coupled summands must be pairwise coupled");
}

struct Start {
  std::vector<Mat> F0;
  std::vector<Mat> X1;
};

// Background metric and starting point: normalize h' conformally, then
// h0 = h' exp(K0(h')), f1 = exp(-K0(h')).
Start start_point(const EquivariantBundle& b, const MetricProfile& hp, const WeightFunction& v,
                  const Grid& g) {
  const int N = g.size(), r = b.rank();
  const double c = einstein_constant(b, v);
  const MetricProfile hn = conformal_normalize(b, hp, v, g);
  MatrixProfile K = weighted_contraction(curvature_package(b, hn, g), v, g);
  for (auto& m : K.at) m -= c * CMat::Identity(r, r);
  const auto K0 = to_real(K, "curvature");
  const auto Fp = to_real(relative_matrix(b, hn, g), "metric");
  Start s;
  for (int n = 0; n < N; ++n) {
    const Mat R = frame_ratio(b, g.nodes()[n]);
    s.F0.push_back(Fp[n] * exp_self_adjoint(Fp[n], K0[n], R));
  }
  // log f1 = -K0 expressed in an h0-unitary frame
  for (int n = 0; n < N; ++n) {
    const Mat R = frame_ratio(b, g.nodes()[n]);
    Eigen::LLT<Mat> llt(s.F0[n].cwiseProduct(R));
    const Mat C = llt.matrixU();
    Mat X = -C * K0[n].cwiseProduct(R) * C.inverse();
    s.X1.push_back(0.5 * (X + X.transpose()));
  }
  return s;
}

}  // namespace

namespace {

// Multiplies the diagonal of base by smooth random factors and adds a random
// coupling term of relative size < 0.45.
MetricProfile perturb_metric(const EquivariantBundle& b, MetricProfile m, const Grid& g,
                             std::uint64_t seed, double amplitude) {
  Rng rng(seed);
  auto smooth = [&](double amp) {
    // low modes only: the start construction exponentiates the curvature,
    // which has to stay resolved on the grid
    std::vector<double> a(3);
    for (auto& x : a) x = rng.uniform(-1.0, 1.0) * amp;
    return g.sample([a](double mu) {
      double s = 0;
      for (int k = 0; k < 3; ++k) s += a[k] * std::cos(k * std::numbers::pi * mu) / (1.0 + k);
      return s;
    });
  };
  for (auto& d : m.diag) d = d.cwiseProduct(smooth(amplitude).array().exp().matrix());
  for (size_t c = 0; c < b.couplings().size(); ++c) {
    const auto& cp = b.couplings()[c];
    const Vec beta = smooth(amplitude).array().tanh() * 0.45;
    const Vec scale = m.diag[cp.from].cwiseProduct(m.diag[cp.to]).array().sqrt();
    m.offdiag[c] = beta.cwiseProduct(scale).cast<cplx>();
  }
  return m;
}

}  // namespace

MetricProfile random_metric(const EquivariantBundle& b, const Grid& g, std::uint64_t seed,
                            double amplitude) {
  return perturb_metric(b, reference_metric(b, g), g, seed, amplitude);
}

MetricProfile split_metric(const EquivariantBundle& b, const WeightFunction& v, const Grid& g) {
  MetricProfile m = reference_metric(b, g);
  for (int i = 0; i < b.rank(); ++i) {
    const EquivariantBundle line = b.restrict_to({i});
    m.diag[i] = conformal_normalize(line, reference_metric(line, g), v, g).diag[0];
  }
  return m;
}

MetricProfile initial_metric(const EquivariantBundle& b, const WeightFunction& v, const Grid& g,
                             const SolverConfig& cfg) {
  const MetricProfile base = split_metric(b, v, g);
  if (cfg.initial == "random") return perturb_metric(b, base, g, cfg.seed, cfg.initial_amplitude);
  return base;
}

SolveOutcome continuity_run(const EquivariantBundle& b, const WeightFunction& v,
                            const SolverConfig& cfg, const std::optional<MetricProfile>& start) {
  cfg.validate();
  require_cliques(b);
  const Grid g(cfg.grid);
  const MetricProfile hp = start ? *start : initial_metric(b, v, g, cfg);
  Start st = start_point(b, hp, v, g);
  Engine eng(b, v, g, st.F0);

  SolveOutcome out;
  {
    MatrixProfile F(g.size(), b.rank());
    for (int n = 0; n < g.size(); ++n) F.at[n] = eng.background()[n].cast<cplx>();
    out.h0 = metric_from_relative(b, F);
  }
  std::vector<Mat> X = st.X1;
  for (int n = 0; n < g.size(); ++n) X[n].diagonal().array() -= eng.shift()[n];
  out.start_residual = eng.residual_sup(X, cfg.eps_start == 1.0 ? 1.0 : cfg.eps_start);
  const double k0 = eng.k0_max();

  auto accept = [&](const std::vector<Mat>& Xa, double eps) {
    ContinuityState s = eng.state(Xa, eps, k0);
    if (!s.det_ok || !s.bound_ok) ++out.monitor_violations;
    out.trail.push_back(s);
    return s;
  };
  auto finish_destabilized = [&](const std::vector<Mat>& Xa, std::string why) {
    out.status = SolveStatus::destabilized;
    out.reason = std::move(why);
    out.projector = eng.extract(Xa);
    return out;
  };

  double eps = cfg.eps_start;
  if (!eng.newton_all(X, eps, 0.0, cfg.newton_tol, cfg.max_newton))
    throw NewtonDiverged("Newton failed at the starting value of epsilon");
  accept(X, eps);

  std::vector<Mat> Xprev;
  double eps_prev = 0;
  int since_polish = 1000;
  for (int step = 0; step < cfg.max_steps; ++step) {
    if (eps <= cfg.polish_eps && (since_polish >= 3 || eps <= cfg.eps_floor)) {
      since_polish = 0;
      std::vector<Mat> Xp = X;
      if (eng.newton_all(Xp, 0.0, cfg.polish_prox, cfg.converged_tol, 3 * cfg.max_newton)) {
        out.status = SolveStatus::converged;
        out.reason = "L_0 residual below tolerance";
        out.metric = eng.metric(Xp);
        out.final_residual = whe_residual(b, *out.metric, v, g);
        out.trail.push_back(eng.state(Xp, 0.0, k0));
        out.trail.back().bound_ok = true;  // the bound is vacuous at epsilon = 0
        return out;
      }
    }
    if (eps <= cfg.eps_floor) break;

    bool ok = false;
    double factor = cfg.eps_ratio, eps_new = eps;
    std::vector<Mat> Xt;
    for (int attempt = 0; attempt < 3 && !ok; ++attempt) {
      eps_new = std::max(eps * factor, cfg.eps_floor);
      Xt = X;
      if (!Xprev.empty()) {
        const double w = (eps_new - eps) / (eps - eps_prev);
        for (int n = 0; n < eng.nodes(); ++n) Xt[n] += w * (X[n] - Xprev[n]);
      }
      ok = eng.newton_all(Xt, eps_new, 0.0, cfg.newton_tol, cfg.max_newton);
      factor = std::sqrt(factor);
    }
    if (!ok) {
      const auto p = eng.extract(X);
      if (p && !p->image.empty())
        return finish_destabilized(X, "Newton failed after two step halvings with a spectral gap");
      std::ostringstream os;
      os << "Newton failed near epsilon=" << eps << " without a visible spectral gap";
      throw NewtonDiverged(os.str());
    }
    Xprev = X;
    eps_prev = eps;
    X = std::move(Xt);
    eps = eps_new;
    ++since_polish;
    const ContinuityState s = accept(X, eps);
    if (s.m_eps > cfg.blowup) return finish_destabilized(X, "m_eps exceeded the blow-up threshold");
  }
  const auto p = eng.extract(X);
  if (p && !p->image.empty())
    return finish_destabilized(X, "epsilon schedule ended with a spectral gap in log f");
  out.status = SolveStatus::budget_exhausted;
  out.reason = "epsilon schedule ended without convergence";
  return out;
}

MatrixProfile perturbed_operator(const EquivariantBundle& b, const WeightFunction& v,
                                 const MetricProfile& h0, const MatrixProfile& f, double eps,
                                 const Grid& g) {
  const int N = g.size(), r = b.rank();
  const double c = einstein_constant(b, v);
  const MatrixProfile F0 = relative_matrix(b, h0, g);
  MatrixProfile F(N, r), logf(N, r);
  for (int n = 0; n < N; ++n) {
    F.at[n] = F0.at[n] * f.at[n];
    const CMat R = frame_ratio(b, g.nodes()[n]).cast<cplx>();
    Eigen::LLT<CMat> llt(F0.at[n].cwiseProduct(R));
    if (llt.info() != Eigen::Success) throw NonPositiveMetric("background metric not positive");
    const CMat C = llt.matrixU();
    const CMat Ci = C.inverse();
    CMat fh = C * f.at[n].cwiseProduct(R) * Ci;
    fh = 0.5 * (fh + fh.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(fh);
    if (es.eigenvalues().minCoeff() <= 0) throw NonPositiveMetric("f is not positive");
    const CMat Lh = es.eigenvectors() * es.eigenvalues().array().log().matrix().asDiagonal().toDenseMatrix().cast<cplx>() *
                    es.eigenvectors().adjoint();
    logf.at[n] = (Ci * Lh * C).cwiseQuotient(R);
  }
  MatrixProfile K = weighted_contraction(curvature_from_relative(b, F, g), v, g);
  for (int n = 0; n < N; ++n) K.at[n] += -c * CMat::Identity(r, r) + eps * logf.at[n];
  return K;
}

FixedWeightSolve solve_at_weight(const EquivariantBundle& b, const WeightFunction& v,
                                 const MetricProfile& start, const SolverConfig& cfg) {
  require_cliques(b);
  const Grid g(cfg.grid);
  FixedWeightSolve out;
  const MetricProfile hn = conformal_normalize(b, start, v, g);
  const auto Fn = to_real(relative_matrix(b, hn, g), "metric");
  Engine eng(b, v, g, Fn);
  std::vector<Mat> X(g.size(), Mat::Zero(b.rank(), b.rank()));
  out.ok = eng.newton_all(X, 0.0, cfg.polish_prox, cfg.converged_tol, 3 * cfg.max_newton);
  out.metric = eng.metric(X);
  out.residual = whe_residual(b, out.metric, v, g);
  return out;
}

DeformationResult weight_deformation_run(const EquivariantBundle& b,
                                         const std::function<WeightFunction(double)>& path,
                                         double t_end, double dt, const MetricProfile& start,
                                         const SolverConfig& cfg) {
  if (!(dt > 0)) throw ConfigError("deformation: dt must be > 0");
  const Grid g(cfg.grid);
  DeformationResult res;
  MetricProfile h = start;
  double t = 0;
  {
    const WeightFunction v0 = path(0.0);
    const double r0 = whe_residual(b, h, v0, g);
    if (r0 > 1e-8) {
      auto s = solve_at_weight(b, v0, h, cfg);
      if (!s.ok) throw DeformationStuck("deformation: no solution at t=0");
      h = s.metric;
    }
    res.steps.push_back({0.0, h, whe_residual(b, h, v0, g)});
  }
  double step = dt;
  while (t < t_end - 1e-14) {
    const double tn = std::min(t + step, t_end);
    const WeightFunction vt = path(tn);
    auto s = solve_at_weight(b, vt, h, cfg);
    if (!s.ok || s.residual > 1e-8) {
      step *= 0.5;
      if (step < 1e-4) {
        std::ostringstream os;
        os << "deformation stuck; last good t=" << t;
        throw DeformationStuck(os.str());
      }
      continue;
    }
    t = tn;
    h = s.metric;
    res.steps.push_back({t, h, s.residual});
    step = std::min(dt, 2 * step);
  }
  return res;
}

nlohmann::json DeformationResult::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : steps) arr.push_back({{"t", s.t}, {"residual", s.residual}});
  return {{"steps", arr}};
}

nlohmann::json SolveOutcome::to_json(const EquivariantBundle& b) const {
  nlohmann::json trail_j = nlohmann::json::array();
  for (const auto& s : trail)
    trail_j.push_back({{"epsilon", s.epsilon},
                       {"residual", s.residual},
                       {"residual_l2", s.residual_l2},
                       {"det_error", s.det_error},
                       {"m_eps", s.m_eps},
                       {"k0_max", s.k0_max},
                       {"det_ok", s.det_ok},
                       {"bound_ok", s.bound_ok}});
  nlohmann::json j = {{"status", status_name(status)},
                      {"reason", reason},
                      {"start_residual", start_residual},
                      {"monitor_violations", monitor_violations},
                      {"trail", trail_j}};
  if (status == SolveStatus::converged) j["final_residual"] = final_residual;
  if (projector) {
    std::vector<std::string> names;
    for (int i : projector->image) names.push_back(b.summand(i).describe());
    j["projector"] = {{"rank", projector->rank},
                      {"image", projector->image},
                      {"image_summands", names},
                      {"overlaps", projector->overlaps},
                      {"slope", projector->slope},
                      {"bundle_slope", projector->bundle_slope},
                      {"gap", projector->gap}};
  } else {
    j["projector"] = nullptr;
  }
  return j;
}

}  // namespace whe
