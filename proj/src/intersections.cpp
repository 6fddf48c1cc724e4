#include "whe/intersections.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "whe/errors.hpp"

namespace whe {

double BackendValue::max_gap() const {
  double g = std::max({std::abs(profile - closed), std::abs(profile - fourier),
                       std::abs(closed - fourier)});
  if (analytic) g = std::max(g, std::abs(*analytic - closed));
  return g;
}

nlohmann::json BackendValue::to_json() const {
  nlohmann::json j = {{"value", closed},
                      {"backends",
                       {{"profile", profile}, {"closed_form", closed}, {"fourier", fourier}}},
                      {"fourier_truncation_estimate", truncation},
                      {"max_gap", max_gap()}};
  if (analytic) j["backends"]["analytic_continuation"] = *analytic;
  return j;
}

double boundary_degree(const EquivariantBundle& b, const WeightFunction& v) {
  double s = 0;
  for (const auto& l : b.summands()) s += v.value(1.0) * l.w1 - v.value(0.0) * l.w0;
  return s;
}

double boundary_c1sq(const EquivariantBundle& b, const WeightFunction& v) {
  double s0 = 0, s1 = 0;
  for (const auto& l : b.summands()) {
    s0 += l.w0;
    s1 += l.w1;
  }
  return s1 * s1 * v.grad(1.0) - s0 * s0 * v.grad(0.0);
}

double boundary_ch2(const EquivariantBundle& b, const WeightFunction& v) {
  double q0 = 0, q1 = 0;
  for (const auto& l : b.summands()) {
    q0 += double(l.w0) * l.w0;
    q1 += double(l.w1) * l.w1;
  }
  return 0.5 * (v.grad(1.0) * q1 - v.grad(0.0) * q0);
}

double profile_degree(const EquivariantBundle& b, const MetricProfile& m, const WeightFunction& v,
                      const Grid& g) {
  const auto pkg = curvature_package(b, m, g);
  return g.integrate(weighted_contraction(pkg, v, g).trace_real());
}

CharSquares char_square_numbers(const EquivariantBundle& b, const MetricProfile& m,
                                const WeightFunction& v, const Grid& g) {
  const auto pkg = curvature_package(b, m, g);
  const Vec d1 = v.grads(g), d2 = v.hessians(g);
  Vec a(g.size()), c(g.size());
  for (int n = 0; n < g.size(); ++n) {
    const cplx trp = pkg.phi.at[n].trace(), trr = pkg.rho.at[n].trace();
    a[n] = 2 * d1[n] * (trp * trr).real() + d2[n] * (trp * trp).real();
    c[n] = d1[n] * (pkg.rho.at[n] * pkg.phi.at[n]).trace().real() +
           0.5 * d2[n] * (pkg.phi.at[n] * pkg.phi.at[n]).trace().real();
  }
  CharSquares out;
  out.c1sq = g.integrate(a);
  out.ch2 = g.integrate(c);
  out.c2 = 0.5 * (out.c1sq - 2 * out.ch2);
  return out;
}

namespace {

void gate(const char* what, const BackendValue& x, const IntersectionOptions& o) {
  if (o.check && x.max_gap() > o.tau_backend) {
    std::ostringstream os;
    os << what << ": backends disagree by " << x.max_gap() << " (profile " << x.profile
       << ", closed " << x.closed << ", fourier " << x.fourier << ")";
    throw BackendMismatch(os.str());
  }
}

}  // namespace

double weighted_volume(const WeightFunction& v, const Grid& g, const IntersectionOptions& o) {
  BackendValue x;
  x.profile = g.integrate(v.values(g));
  x.closed = v.integral(0.0, 1.0);
  FourierData fd(v, o.fourier);
  x.fourier = fd.pair(symbols::volume());
  gate("weighted_volume", x, o);
  return x.closed;
}

double weighted_degree(const EquivariantBundle& b, const WeightFunction& v, const Grid& g,
                       const IntersectionOptions& o) {
  return intersection_report(b, v, g, nullptr, nullptr, o).degree.closed;
}

double weighted_slope(const EquivariantBundle& b, const WeightFunction& v) {
  return boundary_degree(b, v) / b.rank();
}

double einstein_constant(const EquivariantBundle& b, const WeightFunction& v) {
  return weighted_slope(b, v);
}

double einstein_constant(const EquivariantBundle& b, const WeightFunction& v,
                         const WeightFunction& w) {
  return weighted_slope(b, v) / w.integral(0.0, 1.0);
}

IntersectionReport intersection_report(const EquivariantBundle& b, const WeightFunction& v,
                                       const Grid& g, const MetricProfile* metric,
                                       const WeightFunction* w, const IntersectionOptions& o) {
  const MetricProfile m = metric ? *metric : reference_metric(b, g);
  const FourierData fd(v, o.fourier);
  IntersectionReport r;
  r.rank = b.rank();
  r.fourier_roundtrip = fd.roundtrip_error();

  auto fill = [&](BackendValue& x, const Symbol& B) {
    x.fourier = fd.pair(B);
    x.analytic = fd.analytic_pair(B);
    x.truncation = fd.truncation_estimate(B);
  };

  r.volume.profile = g.integrate(v.values(g));
  r.volume.closed = v.integral(0.0, 1.0);
  fill(r.volume, symbols::volume());

  double s0 = 0, s1 = 0, q0 = 0, q1 = 0;
  for (const auto& l : b.summands()) {
    s0 += l.w0;
    s1 += l.w1;
    q0 += double(l.w0) * l.w0;
    q1 += double(l.w1) * l.w1;
  }

  const auto pkg = curvature_package(b, m, g);
  r.degree.profile = g.integrate(weighted_contraction(pkg, v, g).trace_real());
  r.degree.closed = boundary_degree(b, v);
  fill(r.degree, symbols::first_chern(s0, s1));

  const CharSquares cs = char_square_numbers(b, m, v, g);
  r.c1sq.profile = cs.c1sq;
  r.c1sq.closed = boundary_c1sq(b, v);
  fill(r.c1sq, symbols::derivative_jump(s0 * s0, s1 * s1));

  r.ch2.profile = cs.ch2;
  r.ch2.closed = boundary_ch2(b, v);
  fill(r.ch2, symbols::derivative_jump(0.5 * q0, 0.5 * q1));

  auto combine = [](const BackendValue& a, const BackendValue& c, double ca, double cc) {
    BackendValue x;
    x.profile = ca * a.profile + cc * c.profile;
    x.closed = ca * a.closed + cc * c.closed;
    x.fourier = ca * a.fourier + cc * c.fourier;
    if (a.analytic && c.analytic) x.analytic = ca * *a.analytic + cc * *c.analytic;
    x.truncation = std::abs(ca) * a.truncation + std::abs(cc) * c.truncation;
    return x;
  };
  r.c2 = combine(r.c1sq, r.ch2, 0.5, -1.0);
  r.delta = combine(r.c1sq, r.ch2, 1.0, -2.0 * b.rank());

  r.slope = r.degree.closed / b.rank();
  r.einstein_constant = r.slope;
  if (w) r.einstein_constant_w = r.slope / w->integral(0.0, 1.0);

  r.backend_disagreement = 0;
  for (const BackendValue* x : {&r.volume, &r.degree, &r.c1sq, &r.ch2, &r.c2, &r.delta})
    r.backend_disagreement = std::max(r.backend_disagreement, x->max_gap());

  gate("weighted_volume", r.volume, o);
  gate("weighted_degree", r.degree, o);
  gate("c1sq", r.c1sq, o);
  gate("ch2", r.ch2, o);
  return r;
}

nlohmann::json IntersectionReport::to_json() const {
  nlohmann::json j = {{"rank", rank},
                      {"weighted_volume", volume.to_json()},
                      {"weighted_degree", degree.to_json()},
                      {"c1sq_v", c1sq.to_json()},
                      {"ch2_v", ch2.to_json()},
                      {"c2_v", c2.to_json()},
                      {"delta_v", delta.to_json()},
                      {"slope", slope},
                      {"einstein_constant", einstein_constant},
                      {"backend_disagreement", backend_disagreement},
                      {"fourier_roundtrip_error", fourier_roundtrip}};
  j["einstein_constant_w"] = einstein_constant_w ? nlohmann::json(*einstein_constant_w)
                                                 : nlohmann::json(nullptr);
  return j;
}

nlohmann::json BetaReport::to_json() const {
  nlohmann::json j = {{"beta", beta},
                      {"beta_aggregated", aggregated},
                      {"liftable", liftable},
                      {"numerator", numerator},
                      {"denominator", denominator},
                      {"denominator_profile", denominator_profile}};
  j["beta_other_branch"] = other_defined ? nlohmann::json(beta_other) : nlohmann::json(nullptr);
  return j;
}

BetaReport beta_invariant(const EquivariantLineBundle& sub, bool liftable, double s,
                          const Grid& g, int n) {
  const int rk = 1;
  // e^{s mu_F} pulled back to the model coordinate
  const WeightFunction v = exp_weight(2 * s, std::exp(-s));
  const EquivariantBundle tangent({EquivariantLineBundle::make(2, -1, 1)}, {});
  const EquivariantBundle F({EquivariantLineBundle::make(sub.degree, sub.w0, sub.w1)}, {});
  BetaReport r;
  r.liftable = liftable;
  r.numerator = boundary_degree(F, v);
  r.denominator = boundary_degree(tangent, v);
  r.denominator_profile = profile_degree(tangent, reference_metric(tangent, g), v, g);
  const double ratio = r.numerator / r.denominator;
  const double lift_beta = (n + 1.0) / (n + 1.0 - rk) * (1 - ratio);
  const bool nonlift_ok = n - rk > 0;
  const double nonlift_beta = nonlift_ok ? double(n) / (n - rk) * (1 - ratio) : 0.0;
  if (liftable) {
    r.beta = lift_beta;
    r.other_defined = nonlift_ok;
    r.beta_other = nonlift_beta;
  } else {
    if (!nonlift_ok)
      throw DegenerateDenominator("non-liftable branch needs n - rk(F) > 0; here n = rk(F)");
    r.beta = nonlift_beta;
    r.other_defined = true;
    r.beta_other = lift_beta;
  }
  r.aggregated = std::min(1.0, r.beta);
  return r;
}

}  // namespace whe
