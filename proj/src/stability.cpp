#include "whe/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "whe/errors.hpp"

namespace whe {

std::string SubsheafCandidate::describe() const {
  std::ostringstream os;
  os << "{";
  for (size_t i = 0; i < subset.size(); ++i) {
    os << (i ? "," : "") << subset[i];
    if (twists[i].m0 || twists[i].m1) os << "(twist " << twists[i].m0 << "," << twists[i].m1 << ")";
  }
  os << "}";
  return os.str();
}

std::vector<SubsheafCandidate> enumerate_candidates(const EquivariantBundle& b, int max_twist) {
  std::vector<SubsheafCandidate> out;
  const int r = b.rank();
  for (unsigned mask = 1; mask + 1 < (1u << r); ++mask) {
    SubsheafCandidate c;
    for (int i = 0; i < r; ++i)
      if (mask & (1u << i)) {
        c.subset.push_back(i);
        c.twists.push_back({0, 0});
        c.lines.push_back(b.summand(i));
      }
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& c) { return a.rank() < c.rank(); });
  if (r < 2) return out;
  for (int i = 0; i < r; ++i)
    for (int m0 = 0; m0 <= max_twist; ++m0)
      for (int m1 = 0; m1 <= max_twist; ++m1) {
        if (m0 == 0 && m1 == 0) continue;
        const auto& l = b.summand(i);
        SubsheafCandidate c;
        c.subset = {i};
        c.twists = {{m0, m1}};
        c.lines = {{l.degree - m0 - m1, l.w0 + m0, l.w1 - m1}};
        c.pruned = true;
        out.push_back(std::move(c));
      }
  return out;
}

double candidate_slope(const SubsheafCandidate& c, const WeightFunction& v) {
  double s = 0;
  for (const auto& l : c.lines) s += v.value(1.0) * l.w1 - v.value(0.0) * l.w0;
  return s / c.rank();
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::stable: return "stable";
    case Verdict::semistable_not_stable: return "semistable-not-stable";
    case Verdict::polystable: return "polystable";
    case Verdict::unstable: return "unstable";
  }
  return "unknown";
}

StabilityVerdict stability_verdict(const EquivariantBundle& b, const WeightFunction& v,
                                   double tol) {
  StabilityVerdict out;
  double total = 0;
  for (const auto& l : b.summands()) total += v.value(1.0) * l.w1 - v.value(0.0) * l.w0;
  out.bundle_slope = total / b.rank();
  const double scale = tol * (1 + std::abs(out.bundle_slope));

  const auto cands = enumerate_candidates(b);
  double best = -INFINITY;
  for (const auto& c : cands) {
    const double s = candidate_slope(c, v);
    if (c.pruned) {
      // slope of the twisted line against the untwisted summand
      const auto& l = b.summand(c.subset[0]);
      const double base = v.value(1.0) * l.w1 - v.value(0.0) * l.w0;
      if (!(s < base)) out.twist_pruning_holds = false;
      continue;
    }
    out.slope_table.push_back({c, s});
    best = std::max(best, s);
  }

  if (b.rank() == 1) {
    out.verdict = Verdict::stable;
    return out;
  }
  if (best > out.bundle_slope + scale) {
    out.verdict = Verdict::unstable;
    for (const auto& row : out.slope_table)
      if (row.slope >= best - scale) out.witnesses.push_back(row.candidate);
    out.witness = *std::max_element(
        out.witnesses.begin(), out.witnesses.end(),
        [](const auto& a, const auto& c) { return a.rank() < c.rank(); });
    out.witness_slope = best;
    return out;
  }
  bool all_equal = true;
  for (const auto& row : out.slope_table)
    if (row.candidate.rank() == 1 && std::abs(row.slope - out.bundle_slope) > scale)
      all_equal = false;
  out.verdict = all_equal ? Verdict::polystable : Verdict::semistable_not_stable;
  return out;
}

nlohmann::json StabilityVerdict::to_json() const {
  nlohmann::json table = nlohmann::json::array();
  for (const auto& row : slope_table)
    table.push_back({{"subset", row.candidate.subset}, {"slope", row.slope}});
  nlohmann::json j = {{"verdict", verdict_name(verdict)},
                      {"bundle_slope", bundle_slope},
                      {"slope_table", table},
                      {"twist_pruning_holds", twist_pruning_holds}};
  if (verdict == Verdict::unstable) {
    j["witness"] = {{"subset", witness.subset}, {"slope", witness_slope}};
    nlohmann::json all = nlohmann::json::array();
    for (const auto& w : witnesses) all.push_back(w.subset);
    j["witness_set"] = all;
  } else {
    j["witness"] = nullptr;
  }
  return j;
}

std::vector<RationalWeight> weight_spectrum(const EquivariantBundle& b, int k) {
  if (k < 1) throw NegativeTwist("weight spectrum needs k >= 1");
  std::vector<RationalWeight> out;
  for (const auto& l : b.summands()) {
    if (l.degree + k < 0) {
      std::ostringstream os;
      os << "O(" << l.degree << ") twisted by k=" << k << " has negative degree";
      throw NegativeTwist(os.str());
    }
    for (int j = 0; j <= l.degree + k; ++j) out.push_back({l.w0 + j, k});
  }
  return out;
}

namespace {

// Neumaier compensated sum.
struct CompensatedSum {
  double sum = 0, comp = 0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

double chi_of(const std::vector<EquivariantLineBundle>& lines, const WeightFunction& v, int k) {
  CompensatedSum s;
  for (const auto& l : lines)
    for (int j = 0; j <= l.degree + k; ++j) s.add(v.value(double(l.w0 + j) / k));
  return s.value();
}

// Least squares fit y ~ A k + B + C/k.
void fit3(const std::vector<int>& ks, const std::vector<double>& y, double& A, double& B,
          double& C) {
  const int n = static_cast<int>(ks.size());
  Mat X(n, 3);
  Vec Y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = ks[i];
    X(i, 1) = 1.0;
    X(i, 2) = 1.0 / ks[i];
    Y[i] = y[i];
  }
  const Vec c = X.colPivHouseholderQr().solve(Y);
  A = c[0];
  B = c[1];
  C = c[2];
}

}  // namespace

double chi_v(const EquivariantBundle& b, const WeightFunction& v, int k) {
  weight_spectrum(b, k);  // validates
  return chi_of(b.summands(), v, k);
}

double spectrum_overhang(const EquivariantBundle& b, int k) {
  double d = 0;
  for (const auto& w : weight_spectrum(b, k)) {
    const double x = w.value();
    d = std::max({d, -x, x - 1.0});
  }
  return d;
}

std::vector<int> dyadic_range(int kmin, int kmax) {
  std::vector<int> ks;
  for (int k = kmin; k <= kmax; k *= 2) ks.push_back(k);
  return ks;
}

EulerSeries euler_expansion_check(const EquivariantBundle& b, const WeightFunction& v,
                                  const std::vector<int>& ks) {
  if (ks.size() < 4) throw FitDiverged("euler expansion needs at least 4 values of k");
  EulerSeries s;
  s.k_values = ks;
  for (int k : ks) {
    s.chi_values.push_back(chi_v(b, v, k) / b.rank());
    if (spectrum_overhang(b, k) > 0) s.weights_outside = true;
  }
  fit3(ks, s.chi_values, s.A, s.B, s.C);
  if (!std::isfinite(s.A) || !std::isfinite(s.B)) throw FitDiverged("non-finite fit");
  s.A_expected = v.integral(0.0, 1.0);
  double deg = 0;
  for (const auto& l : b.summands()) deg += v.value(1.0) * l.w1 - v.value(0.0) * l.w0;
  s.B_expected = deg / b.rank() + 0.5 * (v.value(0.0) + v.value(1.0));
  s.tolerance = 5.0 / *std::min_element(ks.begin(), ks.end());

  // Decay of the residual after removing the affine part.
  std::vector<double> lx, ly;
  double scale = 0;
  for (size_t i = 0; i < ks.size(); ++i) {
    const double r = s.chi_values[i] - (s.A * ks[i] + s.B);
    s.residuals.push_back(r);
    scale = std::max(scale, std::abs(s.chi_values[i]));
  }
  bool tiny = true;
  for (double r : s.residuals)
    if (std::abs(r) > 1e-9) tiny = false;
  s.exact = tiny;
  if (!tiny) {
    for (size_t i = 0; i < ks.size(); ++i) {
      lx.push_back(std::log(double(ks[i])));
      ly.push_back(std::log(std::abs(s.residuals[i]) + 1e-300));
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    s.decay_exponent = sxy / sxx;
  } else {
    s.decay_exponent = -1.0;
  }
  s.pass = std::abs(s.A - s.A_expected) <= s.tolerance &&
           std::abs(s.B - s.B_expected) <= s.tolerance &&
           (s.exact || std::abs(s.decay_exponent + 1.0) <= 0.2);
  return s;
}

nlohmann::json EulerSeries::to_json() const {
  return {{"k_values", k_values},       {"chi_over_rank", chi_values},
          {"residuals", residuals},     {"A", A},
          {"B", B},                     {"C", C},
          {"A_expected", A_expected},   {"B_expected", B_expected},
          {"tolerance", tolerance},     {"decay_exponent", decay_exponent},
          {"exact", exact},             {"weights_outside_unit_interval", weights_outside},
          {"pass", pass}};
}

std::string EulerSeries::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "k,chi_v_over_rank,residual\n";
  for (size_t i = 0; i < k_values.size(); ++i)
    os << k_values[i] << "," << chi_values[i] << "," << residuals[i] << "\n";
  return os.str();
}

GiesekerReport gieseker_compare(const EquivariantBundle& b, const WeightFunction& v,
                                const std::vector<int>& ks) {
  GiesekerReport rep;
  rep.k_values = ks;
  const int n = static_cast<int>(ks.size());
  std::vector<double> full(n);
  for (int i = 0; i < n; ++i) full[i] = chi_of(b.summands(), v, ks[i]) / b.rank();
  for (const auto& c : enumerate_candidates(b, 0)) {
    if (c.pruned) continue;
    GiesekerRow row;
    row.subset = c.subset;
    for (int i = 0; i < n; ++i) row.differences.push_back(chi_of(c.lines, v, ks[i]) / c.rank() - full[i]);
    double C;
    fit3(ks, row.differences, row.leading, row.constant, C);
    double scale = 1;
    for (double x : full) scale = std::max(scale, std::abs(x));
    const double tol = 1e-10 * scale;
    if (std::abs(row.leading) < 1e-9 && std::abs(row.constant) < 1e-8) {
      row.order = GiesekerOrder::equal_through_constant;
      row.stabilizes_at = ks.front();
    } else {
      auto sign = [&](double x) { return x > tol ? 1 : (x < -tol ? -1 : 0); };
      const int last = sign(row.differences.back());
      int first = n - 1;
      while (first > 0 && sign(row.differences[first - 1]) == last) --first;
      if (last == 0 || first > n / 2) {
        std::ostringstream os;
        os << "Gieseker ordering of subset " << c.describe() << " is not settled over the k range";
        throw Inconclusive(os.str());
      }
      row.stabilizes_at = ks[first];
      row.order = last > 0 ? GiesekerOrder::destabilizes : GiesekerOrder::below;
      if (last > 0) rep.gieseker_stable = false;
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

nlohmann::json GiesekerReport::to_json() const {
  nlohmann::json rows_j = nlohmann::json::array();
  for (const auto& r : rows) {
    std::string o = r.order == GiesekerOrder::destabilizes ? "destabilizes"
                    : r.order == GiesekerOrder::below      ? "below"
                                                           : "equal through O(1), refine";
    rows_j.push_back({{"subset", r.subset},
                      {"ordering", o},
                      {"stabilizes_at_k", r.stabilizes_at},
                      {"leading_coefficient", r.leading},
                      {"constant_coefficient", r.constant},
                      {"differences", r.differences}});
  }
  return {{"k_values", k_values}, {"rows", rows_j}, {"gieseker_stable", gieseker_stable}};
}

}  // namespace whe
