// Acceptance battery: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "whe/errors.hpp"
#include "whe/intersections.hpp"
#include "whe/io.hpp"
#include "whe/reports.hpp"
#include "whe/solver.hpp"
#include "whe/stability.hpp"

using namespace whe;
using nlohmann::json;
using std::numbers::pi;

#ifndef WHE_CLI_PATH
#error "WHE_CLI_PATH must name the whe executable"
#endif

namespace {

constexpr int kGrid = 64;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double time_limit,
               const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char timing[96];
  std::snprintf(timing, sizeof timing, " [%.1f s", dt);
  std::string t = timing;
  if (time_limit > 0) {
    char lim[48];
    std::snprintf(lim, sizeof lim, ", limit %.0f s", time_limit);
    t += lim;
    if (dt > time_limit) {
      o.pass = false;
      t += ", over budget";
    }
  }
  t += "]";
  if (!o.pass) ++failures;
  std::printf("%s %2d %s: %s%s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(),
              t.c_str());
  std::fflush(stdout);
}

std::string sci(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2e", x);
  return b;
}

EquivariantBundle bundle(const char* text) { return make_bundle(json::parse(text)); }

const char* kO1 = R"({"summands":[{"degree":1,"weights":[0,1]}]})";
const char* kEqual = R"({"summands":[{"degree":1,"weights":[0,1]},{"degree":1,"weights":[0,1]}],"couplings":"none"})";
const char* kTwisted = R"({"summands":[{"degree":1,"weights":[0,1]},{"degree":1,"weights":[-1,0]}],"couplings":"none"})";
const char* kO0O2 = R"({"summands":[{"degree":0,"weights":[0,0]},{"degree":2,"weights":[-1,1]}],"couplings":"auto"})";
const char* kLifted = R"({"summands":[{"degree":0,"weights":[0,0]},{"degree":0,"weights":[1,1]}],"couplings":"auto"})";
const char* kRank3 = R"({"summands":[{"degree":1,"weights":[0,1]},{"degree":1,"weights":[0,1]},{"degree":1,"weights":[-1,0]}],"couplings":"none"})";
const char* kCoupled = R"({"summands":[{"degree":1,"weights":[0,1]},{"degree":1,"weights":[0,1]}],"couplings":"auto"})";

std::vector<const char*> split_matrix() { return {kEqual, kTwisted, kO0O2, kLifted, kRank3, kCoupled}; }

std::vector<WeightFunction> four_families() {
  return {constant_weight(1.0), exp_weight(1.0), sasaki_weight(1.0, 2.0, 2.0),
          poly_weight({{1.0, 1.0, 2.0}})};
}

// Boundary formulas written out directly from the lift weights.
double oracle_degree(const EquivariantBundle& b, const WeightFunction& v) {
  double s = 0;
  for (const auto& l : b.summands()) s += v.value(1) * l.w1 - v.value(0) * l.w0;
  return s;
}
double oracle_c1sq(const EquivariantBundle& b, const WeightFunction& v) {
  double a0 = 0, a1 = 0;
  for (const auto& l : b.summands()) {
    a0 += l.w0;
    a1 += l.w1;
  }
  return a1 * a1 * v.grad(1) - a0 * a0 * v.grad(0);
}
double oracle_ch2(const EquivariantBundle& b, const WeightFunction& v) {
  double s0 = 0, s1 = 0;
  for (const auto& l : b.summands()) {
    s0 += l.w0 * l.w0;
    s1 += l.w1 * l.w1;
  }
  return 0.5 * (v.grad(1) * s1 - v.grad(0) * s0);
}

// Monitors accumulated over every continuity run in the battery.
struct MonitorTally {
  long states = 0;
  long det_bad = 0;
  long bound_bad = 0;
  long reported = 0;
  double worst_det = 0;
  void add(const SolveOutcome& o) {
    reported += o.monitor_violations;
    for (const auto& s : o.trail) {
      ++states;
      worst_det = std::max(worst_det, s.det_error);
      if (!(s.det_error < 1e-9)) ++det_bad;
      if (!(s.m_eps <= s.k0_max / s.epsilon + 1e-6)) ++bound_bad;
    }
  }
} monitors;

SolveOutcome run(const EquivariantBundle& b, const WeightFunction& v, SolverConfig cfg) {
  const SolveOutcome o = continuity_run(b, v, cfg);
  monitors.add(o);
  return o;
}

SolverConfig config_for(const EquivariantBundle& b) {
  SolverConfig c;
  c.grid = kGrid;
  if (!b.couplings().empty()) c.initial = "random";
  return c;
}

}  // namespace

int main() {
  const Grid g(kGrid);
  std::printf("acceptance battery, grid %d\n", kGrid);

  criterion(1, "representative independence", 5, [&] {
    double worst = 0;
    IntersectionOptions o;
    o.check = false;
    for (const char* spec : {kO1, kTwisted, kO0O2}) {
      const auto b = bundle(spec);
      for (const auto& v : four_families()) {
        const CharSquares base = char_square_numbers(b, reference_metric(b, g), v, g);
        const double d0 = profile_degree(b, reference_metric(b, g), v, g);
        for (std::uint64_t seed : {101u, 202u, 303u}) {
          const MetricProfile h = random_metric(b, g, seed, 0.3);
          const CharSquares c = char_square_numbers(b, h, v, g);
          worst = std::max({worst, std::abs(profile_degree(b, h, v, g) - d0),
                            std::abs(c.c1sq - base.c1sq), std::abs(c.ch2 - base.ch2),
                            std::abs(c.c2 - base.c2)});
        }
      }
    }
    return Outcome{worst < 1e-8, "max spread " + sci(worst) + " over 3x4x3 (tol 1e-8)"};
  });

  criterion(2, "backend triangle", 30, [&] {
    double worst = 0;
    IntersectionOptions o;
    o.check = false;
    std::vector<const char*> all = split_matrix();
    all.push_back(kO1);
    for (const char* spec : all) {
      const auto b = bundle(spec);
      for (const auto& v : four_families()) {
        const IntersectionReport r = intersection_report(b, v, g, nullptr, nullptr, o);
        worst = std::max(worst, r.backend_disagreement);
        worst = std::max({worst, std::abs(r.degree.closed - oracle_degree(b, v)),
                          std::abs(r.c1sq.closed - oracle_c1sq(b, v)),
                          std::abs(r.ch2.closed - oracle_ch2(b, v))});
      }
    }
    double exp_gap = 0;
    const auto o1 = bundle(kO1);
    for (double t : {0.5, 1.0, 2.0}) {
      const IntersectionReport r = intersection_report(o1, exp_weight(t), g, nullptr, nullptr, o);
      const double want = t * std::exp(t);
      exp_gap = std::max({exp_gap, std::abs(r.c1sq.profile - want), std::abs(r.c1sq.closed - want),
                          std::abs(r.c1sq.fourier - want)});
    }
    return Outcome{worst < 1e-4 && exp_gap < 1e-4,
                   "pairwise " + sci(worst) + ", c1^2 of O(1) vs t e^t " + sci(exp_gap) +
                       " (tol 1e-4)"};
  });

  criterion(3, "line-bundle solver", 0, [&] {
    struct Pair {
      const char* b;
      WeightFunction v;
    };
    const std::vector<Pair> pairs = {
        {kO1, constant_weight(1.0)},
        {kO1, exp_weight(1.0)},
        {R"({"summands":[{"degree":0,"weights":[1,1]}]})", exp_weight(1.0)},
        {R"({"summands":[{"degree":2,"weights":[-1,1]}]})", poly_weight({{1.0, 1.0, 2.0}})},
        {R"({"summands":[{"degree":3,"weights":[-1,2]}]})", sasaki_weight(1.0, 2.0, 2.0)},
        {kO1, exp_weight(-2.0)}};
    double err = 0, res = 0, min_order = INFINITY;
    int ordered = 0;
    for (const auto& p : pairs) {
      const auto b = bundle(p.b);
      const auto& l = b.summand(0);
      const double cv = p.v.value(1) * l.w1 - p.v.value(0) * l.w0;
      auto error_at = [&](int n) {
        const Grid gn(n);
        const LineSolution s = line_bundle_whe(b, p.v, gn);
        const Vec want =
            gn.sample([&](double mu) { return (cv * mu + l.w0 * p.v.value(0)) / p.v.value(mu); });
        return std::pair{(s.moment - want).cwiseAbs().maxCoeff(), s.residual};
      };
      const auto [e, r] = error_at(kGrid);
      err = std::max(err, e);
      res = std::max(res, r);
      const double e6 = error_at(6).first, e12 = error_at(12).first;
      if (e6 > 1e-12) {
        ++ordered;
        min_order = std::min(min_order, std::log2(e6 / std::max(e12, 1e-16)));
      }
    }
    const bool ok = err < 1e-7 && res < 1e-8 && ordered >= 3 && min_order >= 2;
    return Outcome{ok, "moment error " + sci(err) + " (tol 1e-7), residual " + sci(res) +
                           " (tol 1e-8), min observed order " + sci(min_order) + " over " +
                           std::to_string(ordered) + " non-exact pairs (need >= 2)"};
  });

  criterion(4, "continuity-method dichotomy", 120, [&] {
    const std::vector<WeightFunction> weights = {constant_weight(1.0), exp_weight(1.0),
                                                 poly_weight({{1.0, 1.0, 2.0}})};
    int entries = 0, agree = 0, conv = 0, destab = 0;
    std::string bad;
    for (const char* spec : split_matrix()) {
      const auto b = bundle(spec);
      for (const auto& v : weights) {
        ++entries;
        const StabilityVerdict sv = stability_verdict(b, v);
        const bool poly = sv.verdict == Verdict::stable || sv.verdict == Verdict::polystable;
        const SolveOutcome o = run(b, v, config_for(b));
        bool ok = false;
        if (o.status == SolveStatus::converged) {
          ++conv;
          ok = poly && o.final_residual < 1e-8;
        } else if (o.status == SolveStatus::destabilized && o.projector) {
          ++destab;
          bool witness = false;
          for (const auto& w : sv.witnesses) witness = witness || w.subset == o.projector->image;
          ok = !poly && witness;
        }
        if (ok) ++agree;
        else bad += " [" + b.describe() + " / " + v.describe() + "]";
      }
    }
    return Outcome{agree == entries && entries >= 18,
                   std::to_string(agree) + "/" + std::to_string(entries) + " entries agree (" +
                       std::to_string(conv) + " converged, " + std::to_string(destab) +
                       " destabilized)" + bad};
  });

  criterion(6, "Euler expansion", 10, [&] {
    const std::vector<int> ks = dyadic_range(64, 1024);
    const double tol = 5.0 / ks.front();
    double worst_a = 0, worst_b = 0, worst_rate = 0;
    int decaying = 0;
    for (const char* spec : {kO1, kTwisted, kO0O2, kRank3}) {
      const auto b = bundle(spec);
      for (const auto& v : four_families()) {
        const EulerSeries e = euler_expansion_check(b, v, ks);
        const double slope = oracle_degree(b, v) / b.rank();
        worst_a = std::max(worst_a, std::abs(e.A - v.integral(0, 1)));
        worst_b = std::max(worst_b, std::abs(e.B - slope - 0.5 * (v.value(0) + v.value(1))));
        if (!e.exact) {
          ++decaying;
          worst_rate = std::max(worst_rate, std::abs(e.decay_exponent + 1));
        }
      }
    }
    const bool ok = worst_a <= tol && worst_b <= tol && worst_rate <= 0.2;
    return Outcome{ok, "|A - int v| " + sci(worst_a) + ", |B - expected| " + sci(worst_b) +
                           " (tol " + sci(tol) + "), decay exponent off by " + sci(worst_rate) +
                           " over " + std::to_string(decaying) + " non-exact series (tol 0.2)"};
  });

  criterion(7, "Luebke and Yang-Mills", 0, [&] {
    double line_gap = 0;
    bool flat = true;
    const std::vector<std::pair<const char*, WeightFunction>> lines = {
        {kO1, constant_weight(1.0)},
        {kO1, exp_weight(1.0)},
        {R"({"summands":[{"degree":2,"weights":[-1,1]}]})", poly_weight({{1.0, 1.0, 2.0}})},
        {R"({"summands":[{"degree":3,"weights":[-1,2]}]})", sasaki_weight(1.0, 2.0, 2.0)}};
    for (const auto& [spec, v] : lines) {
      const auto b = bundle(spec);
      const LubkeReport L = lubke_report(b, line_bundle_whe(b, v, g).metric, v, g);
      line_gap = std::max(line_gap, std::abs(L.gap));
      flat = flat && L.projectively_flat;
    }
    double identity = 0;
    const auto e = exp_weight(1.0);
    const auto coupled = bundle(kCoupled);
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
      identity = std::max(identity,
                          yang_mills_report(coupled, random_metric(coupled, g, 500 + seed, 0.3), e, g)
                              .identity_residual);
    double bound = 0;
    for (const auto& [spec, v] : std::vector<std::pair<const char*, WeightFunction>>{
             {kTwisted, constant_weight(1.0)}, {kEqual, e}, {kCoupled, e}}) {
      const auto b = bundle(spec);
      const SolveOutcome o = run(b, v, config_for(b));
      if (!o.metric) return Outcome{false, "no solved metric for " + b.describe()};
      bound = std::max(bound, std::abs(yang_mills_report(b, *o.metric, v, g).bound_gap));
    }
    const bool ok = line_gap < 1e-10 && flat && identity < 1e-6 && bound < 1e-6;
    return Outcome{ok, "line-bundle gap " + sci(line_gap) + " (tol 1e-10), flat " +
                           (flat ? "yes" : "no") + ", YM identity " + sci(identity) +
                           " over 10 metrics, YM bound gap " + sci(bound) + " (tol 1e-6)"};
  });

  criterion(8, "Donaldson functional", 0, [&] {
    const auto b = bundle(kCoupled);
    const auto v = exp_weight(1.0);
    double cocycle = 0;
    for (std::uint64_t s = 0; s < 3; ++s) {
      const MetricProfile a = random_metric(b, g, 700 + 3 * s, 0.3),
                          m = random_metric(b, g, 701 + 3 * s, 0.3),
                          c = random_metric(b, g, 702 + 3 * s, 0.3);
      cocycle = std::max(cocycle, std::abs(donaldson_functional(b, v, a, {c}, g).value -
                                           donaldson_functional(b, v, a, {m, c}, g).value));
    }
    double convex = INFINITY;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const MetricProfile h = random_metric(b, g, 800 + 2 * s, 0.3);
      const MetricProfile k = random_metric(b, g, 801 + 2 * s, 0.3);
      const MatrixProfile X = log_ratio(b, relative_matrix(b, h, g), relative_matrix(b, k, g), g);
      convex = std::min(convex, geodesic_convexity(b, v, h, X, 1.0, 8, g).min);
    }
    SolverConfig c1 = config_for(b), c2 = config_for(b);
    c1.seed = 3;
    c2.seed = 11;
    const SolveOutcome o1 = run(b, v, c1), o2 = run(b, v, c2);
    if (!o1.metric || !o2.metric) return Outcome{false, "continuity runs did not converge"};
    double first = 0;
    for (const auto* sol : {&*o1.metric, &*o2.metric}) {
      const MatrixProfile F = relative_matrix(b, *sol, g);
      for (std::uint64_t s = 0; s < 3; ++s) {
        const MatrixProfile X =
            log_ratio(b, F, relative_matrix(b, random_metric(b, g, 900 + s, 0.3), g), g);
        first = std::max(first, std::abs(donaldson_derivative(b, v, F, X, g)));
      }
    }
    // Split bundles are never simple, so two solutions can differ by any
    // constant automorphism; scalar agreement is checked on a line bundle.
    const UniquenessCheck pair = compare_solutions(b, *o1.metric, *o2.metric, g);
    const auto line = bundle(kO1);
    SolverConfig lc;
    lc.grid = kGrid;
    const auto la = solve_at_weight(line, v, random_metric(line, g, 5, 0.3), lc);
    const auto lb = solve_at_weight(line, v, random_metric(line, g, 9, 0.3), lc);
    const UniquenessCheck scalar = compare_solutions(line, la.metric, lb.metric, g);
    const bool ok = cocycle < 1e-7 && convex >= -1e-8 && first < 1e-7 && la.ok && lb.ok &&
                    scalar.parallel_defect < 1e-6 && pair.parallel_defect < 1e-6;
    return Outcome{ok, "cocycle " + sci(cocycle) + " (tol 1e-7), min second difference " +
                           sci(convex) + " over 20 geodesics (tol -1e-8), first variation " +
                           sci(first) + " (tol 1e-7), line-bundle scalar defect " +
                           sci(scalar.parallel_defect) + ", rank-2 constant-automorphism defect " +
                           sci(pair.parallel_defect) + " (tol 1e-6; non-scalar part " +
                           sci(pair.scalar_defect) + ", bundle not simple)"};
  });

  // Evaluated after every solver run above.
  criterion(5, "a-priori monitors", 0, [&] {
    const bool ok = monitors.states > 0 && monitors.det_bad == 0 && monitors.bound_bad == 0 &&
                    monitors.reported == 0;
    return Outcome{ok, std::to_string(monitors.states) + " accepted states, " +
                           std::to_string(monitors.det_bad) + " det violations (worst " +
                           sci(monitors.worst_det) + "), " + std::to_string(monitors.bound_bad) +
                           " bound violations, " + std::to_string(monitors.reported) +
                           " flagged by the solver"};
  });

  criterion(9, "beta obstruction and extension solitons", 0, [&] {
    const auto sub = EquivariantLineBundle::make(1, 0, 1);
    double worst = 0;
    bool shape = true;
    for (double s : {0.0, 0.5, 1.0}) {
      const double beta = beta_invariant(sub, true, s, g).beta;
      worst = std::max(worst, std::abs(beta - 2 / (std::exp(2 * s) + 1)));
      shape = shape && (s == 0 ? std::abs(beta - 1) < 1e-8 : beta < 1);
    }
    double ext = 0;
    for (double gamma : {0.0, prescribed_extension_gamma()})
      ext = std::max(ext, extension_soliton_check(gamma, g).residual);
    return Outcome{worst < 1e-8 && shape && ext < 1e-6,
                   "beta vs 2/(e^{2s}+1) " + sci(worst) + " (tol 1e-8), beta(0) = 1 and beta < 1 "
                   "for s > 0: " + (shape ? "yes" : "no") + ", extension residual " + sci(ext) +
                       " (tol 1e-6)"};
  });

  criterion(10, "determinism", 0, [&] {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "whe-acceptance";
    fs::remove_all(root);
    for (const char* d : {"a", "b"}) {
      const std::string cmd = std::string("\"") + WHE_CLI_PATH + "\" report-all --plot --seed 7 --out \"" +
                              (root / d).string() + "\" > /dev/null 2>&1";
      const int rc = std::system(cmd.c_str());
      if (rc != 0) return Outcome{false, "report-all exited with status " + std::to_string(rc)};
    }
    int files = 0, differ = 0;
    for (const auto& e : fs::directory_iterator(root / "a")) {
      ++files;
      const fs::path other = root / "b" / e.path().filename();
      if (!fs::exists(other) ||
          read_text_file(e.path().string()) != read_text_file(other.string()))
        ++differ;
    }
    fs::remove_all(root);
    return Outcome{files > 0 && differ == 0,
                   std::to_string(files) + " output files, " + std::to_string(differ) + " differ"};
  });

  std::printf("%d criteria failed\n", failures);
  return failures;
}
