// Command-line front end: intersect, stability, gieseker, solve, lubke, beta,
// report-all. Exit codes: 0 ok, 1 configuration error, 2 failed check,
// 3 solver stopped without converging or destabilizing.

#include <fftw3.h>
#include <gsl/gsl_version.h>

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>

#include "whe/errors.hpp"
#include "whe/intersections.hpp"
#include "whe/io.hpp"
#include "whe/reports.hpp"
#include "whe/solver.hpp"
#include "whe/stability.hpp"

using nlohmann::json;
using namespace whe;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Ctx {
  std::string command;
  json cfg = json::object();
  std::string out = ".";
  std::uint64_t seed = 1;
  int grid = 64;
  bool plot = false;
  json checks = json::array();
  bool all_pass = true;

  // Records a comparison; value must not exceed bound.
  void check(const std::string& name, double value, double bound, const std::string& source) {
    const bool pass = std::isfinite(value) && value <= bound;
    checks.push_back({{"name", name}, {"value", value}, {"bound", bound}, {"source", source},
                      {"pass", pass}});
    all_pass = all_pass && pass;
  }
  void check_flag(const std::string& name, bool pass, const std::string& source) {
    checks.push_back({{"name", name}, {"pass", pass}, {"source", source}});
    all_pass = all_pass && pass;
  }
};

json versions() {
  return {{"whe", kVersion},
          {"modules",
           {{"model-geometry", kVersion},
            {"weight-calculus", kVersion},
            {"equivariant-intersections", kVersion},
            {"stability-analyzer", kVersion},
            {"whe-solver", kVersion},
            {"cli-reports", kVersion}}},
          {"libraries",
           {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                          "." + std::to_string(EIGEN_MINOR_VERSION)},
            {"gsl", GSL_VERSION},
            {"fftw", std::string(fftw_version)},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}}};
}

SolverConfig solver_config(const Ctx& c) {
  SolverConfig s;
  s.grid = c.grid;
  s.seed = c.seed;
  s = solver_config_from_json(c.cfg.value("solver", json(nullptr)), s);
  if (c.cfg.contains("solver") && !c.cfg["solver"].contains("grid")) s.grid = c.grid;
  return s;
}

json tolerances() {
  return {{"backend", 1e-4},        {"representative", 1e-8}, {"line_moment", 1e-7},
          {"line_residual", 1e-8},  {"solver_residual", 1e-8}, {"det_one", 1e-9},
          {"a_priori_bound", 1e-6}, {"lubke_equality", 1e-10}, {"yang_mills", 1e-6},
          {"donaldson_cocycle", 1e-7}, {"convexity", 1e-8},     {"first_variation", 1e-7},
          {"uniqueness", 1e-6},     {"beta", 1e-8},            {"extension", 1e-6}};
}

void write_report(Ctx& c, const std::string& name, json body) {
  json meta = {{"command", c.command},
               {"versions", versions()},
               {"grid", c.grid},
               {"seed", c.seed},
               {"tolerances", tolerances()}};
  body["meta"] = meta;
  body["checks"] = c.checks;
  body["all_checks_pass"] = c.all_pass;
  write_text_file((std::filesystem::path(c.out) / (name + ".json")).string(), json_text(body));
}

void write_side(const Ctx& c, const std::string& file, const std::string& text) {
  write_text_file((std::filesystem::path(c.out) / file).string(), text);
}

EquivariantBundle bundle_of(const Ctx& c, const char* fallback) {
  return make_bundle(c.cfg.contains("bundle") ? c.cfg["bundle"] : json::parse(fallback));
}

WeightFunction weight_of(const Ctx& c, const char* fallback) {
  return make_weight(c.cfg.contains("weight") ? c.cfg["weight"] : json::parse(fallback));
}

const char* kLine = R"({"summands":[{"degree":1,"weights":[0,1]}]})";
const char* kExp = R"({"family":"exp","rate":1})";

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

// ---------------------------------------------------------------------------

json run_intersect(Ctx& c, const EquivariantBundle& b, const WeightFunction& v,
                   const WeightFunction* w, const std::string& tag) {
  const Grid g(c.grid);
  IntersectionOptions o;
  o.check = false;
  const IntersectionReport r = intersection_report(b, v, g, nullptr, w, o);
  c.check(tag + "backend_disagreement", r.backend_disagreement, 1e-4, "profile/closed_form/fourier");
  double rep = 0;
  for (int k = 0; k < 3; ++k) {
    const MetricProfile h = random_metric(b, g, c.seed + 101 * (k + 1), 0.3);
    const IntersectionReport q = intersection_report(b, v, g, &h, w, o);
    rep = std::max({rep, std::abs(q.degree.profile - r.degree.profile),
                    std::abs(q.c1sq.profile - r.c1sq.profile),
                    std::abs(q.ch2.profile - r.ch2.profile)});
  }
  c.check(tag + "representative_independence", rep, 1e-8, "profile across random metrics");
  json j = r.to_json();
  j["representative_spread"] = rep;
  j["bundle"] = b.to_json();
  j["weight"] = v.params();
  j["weight_family"] = family_name(v.family());
  return j;
}

int cmd_intersect(Ctx& c) {
  const auto b = bundle_of(c, kLine);
  const auto v = weight_of(c, kExp);
  std::optional<WeightFunction> w;
  if (c.cfg.contains("second_weight")) w = make_weight(c.cfg["second_weight"]);
  json j = run_intersect(c, b, v, w ? &*w : nullptr, "");
  if (c.plot) {
    const Grid g(c.grid);
    write_side(c, "weight.svg",
               emit_plot({{"v", to_std(g.nodes()), to_std(v.values(g))}}, PlotKind::polytope_weight,
                         "weight on the momentum interval"));
  }
  write_report(c, "intersect", j);
  return c.all_pass ? 0 : 2;
}

json run_stability(Ctx& c, const EquivariantBundle& b, const WeightFunction& v,
                   const std::string& tag) {
  const StabilityVerdict s = stability_verdict(b, v);
  c.check_flag(tag + "twist_pruning", s.twist_pruning_holds, "boundary slope formula");
  json j = s.to_json();
  j["bundle"] = b.to_json();
  j["weight"] = v.params();
  return j;
}

int cmd_stability(Ctx& c) {
  const auto b = bundle_of(
      c, R"({"summands":[{"degree":1,"weights":[0,1]},{"degree":1,"weights":[-1,0]}],"couplings":"none"})");
  const auto v = weight_of(c, kExp);
  write_report(c, "stability", run_stability(c, b, v, ""));
  return c.all_pass ? 0 : 2;
}

std::vector<int> k_values_of(const Ctx& c) {
  if (c.cfg.contains("k_values")) return c.cfg["k_values"].get<std::vector<int>>();
  return dyadic_range(64, 1024);
}

json run_gieseker(Ctx& c, const EquivariantBundle& b, const WeightFunction& v,
                  const std::vector<int>& ks, const std::string& tag, std::string* csv) {
  const EulerSeries e = euler_expansion_check(b, v, ks);
  c.check(tag + "euler_A", std::abs(e.A - e.A_expected), e.tolerance, "int v");
  c.check(tag + "euler_B", std::abs(e.B - e.B_expected), e.tolerance, "slope + endpoint average");
  if (!e.exact) c.check(tag + "euler_decay", std::abs(e.decay_exponent + 1), 0.2, "rate -1");
  json j = {{"euler", e.to_json()}};
  if (b.rank() > 1) {
    try {
      j["gieseker"] = gieseker_compare(b, v, ks).to_json();
    } catch (const Inconclusive& ex) {
      j["gieseker"] = {{"inconclusive", ex.what()}};
    }
  }
  if (csv) *csv = e.to_csv();
  return j;
}

int cmd_gieseker(Ctx& c) {
  const auto b = bundle_of(
      c, R"({"summands":[{"degree":1,"weights":[0,1]},{"degree":1,"weights":[-1,0]}],"couplings":"none"})");
  const auto v = weight_of(c, kExp);
  std::string csv;
  json j = run_gieseker(c, b, v, k_values_of(c), "", &csv);
  j["bundle"] = b.to_json();
  j["weight"] = v.params();
  write_side(c, "euler.csv", csv);
  write_report(c, "gieseker", j);
  return c.all_pass ? 0 : 2;
}

// ---------------------------------------------------------------------------

json run_line(Ctx& c, const EquivariantBundle& b, const WeightFunction& v, const std::string& tag,
              std::optional<std::string> svg_name) {
  const Grid g(c.grid);
  const LineSolution s = line_bundle_whe(b, v, g);
  c.check(tag + "moment_vs_closed_form", s.moment_error, 1e-7, "closed-form moment profile");
  c.check(tag + "residual", s.residual, 1e-8, "equation residual");
  if (c.plot && svg_name)
    write_side(c, *svg_name,
               emit_plot({{"solved", to_std(g.nodes()), to_std(s.moment)},
                          {"closed form", to_std(g.nodes()), to_std(s.moment_closed_form)}},
                         PlotKind::profile, "moment profile of the solved line bundle"));
  return {{"einstein_constant", s.einstein_constant},
          {"moment_error", s.moment_error},
          {"residual", s.residual},
          {"mu", to_std(g.nodes())},
          {"moment", to_std(s.moment)}};
}

std::string trail_csv(const SolveOutcome& o) {
  std::vector<double> e, r, r2, m, d, k;
  for (const auto& s : o.trail) {
    e.push_back(s.epsilon);
    r.push_back(s.residual);
    r2.push_back(s.residual_l2);
    m.push_back(s.m_eps);
    d.push_back(s.det_error);
    k.push_back(s.k0_max);
  }
  return csv_text({"epsilon", "residual", "residual_l2", "m_eps", "det_error", "k0_max"},
                  {e, r, r2, m, d, k});
}

// Returns the outcome; records the dichotomy checks against the slope table.
json run_continuity(Ctx& c, const EquivariantBundle& b, const WeightFunction& v,
                    const SolverConfig& cfg, const std::string& tag, SolveOutcome* keep,
                    std::string* csv) {
  const SolveOutcome o = continuity_run(b, v, cfg);
  if (o.status == SolveStatus::budget_exhausted) throw NoConvergence(tag + o.reason);
  const StabilityVerdict sv = stability_verdict(b, v);
  const bool poly = sv.verdict == Verdict::stable || sv.verdict == Verdict::polystable;
  c.check(tag + "monitor_violations", o.monitor_violations, 0, "det-one and a-priori bound");
  if (o.status == SolveStatus::converged) {
    c.check(tag + "final_residual", o.final_residual, 1e-8, "equation residual");
    c.check_flag(tag + "converged_iff_polystable", poly, "slope table");
  } else {
    c.check_flag(tag + "destabilized_iff_unstable", !poly, "slope table");
    bool in_set = false;
    for (const auto& w : sv.witnesses) in_set = in_set || w.subset == o.projector->image;
    c.check_flag(tag + "projector_in_witness_set", in_set, "slope table");
    c.check(tag + "projector_slope", o.projector->bundle_slope - o.projector->slope, 1e-9,
            "slope table");
  }
  if (csv) *csv = trail_csv(o);
  json j = o.to_json(b);
  j["verdict"] = verdict_name(sv.verdict);
  if (keep) *keep = o;
  return j;
}

WeightFunction deform_path(const std::string& kind, double t) {
  if (kind == "sasaki") return sasaki_weight(t, 1.0, 1.0);
  return exp_weight(t);
}

int cmd_solve(Ctx& c) {
  const auto b = bundle_of(c, kLine);
  const auto v = weight_of(c, kExp);
  const std::string mode = c.cfg.value("mode", b.rank() == 1 ? "line" : "continuity");
  SolverConfig cfg = solver_config(c);
  json j = {{"mode", mode}, {"bundle", b.to_json()}, {"weight", v.params()},
            {"solver", cfg.to_json()}};
  if (mode == "line") {
    j["line"] = run_line(c, b, v, "", "profile.svg");
  } else if (mode == "continuity") {
    SolveOutcome o;
    std::string csv;
    j["continuity"] = run_continuity(c, b, v, cfg, "", &o, &csv);
    write_side(c, "trail.csv", csv);
    if (c.plot && !o.trail.empty()) {
      std::vector<double> e, m, r;
      for (const auto& s : o.trail) {
        e.push_back(s.epsilon);
        m.push_back(s.m_eps);
        r.push_back(s.residual);
      }
      write_side(c, "convergence.svg",
                 emit_plot({{"m_eps", e, m}}, PlotKind::convergence, "m_eps against epsilon"));
    }
  } else if (mode == "deform") {
    const json d = c.cfg.value("deform", json::object());
    const std::string kind = d.value("path", "exp");
    const double t_end = d.value("t_end", 1.0), dt = d.value("dt", 0.25);
    const Grid g(cfg.grid);
    const WeightFunction v0 = deform_path(kind, 0.0);
    MetricProfile start = b.rank() == 1 ? line_bundle_whe(b, v0, g).metric
                                        : split_metric(b, v0, g);
    const DeformationResult res = weight_deformation_run(
        b, [&](double t) { return deform_path(kind, t); }, t_end, dt, start, cfg);
    double worst = 0;
    for (const auto& s : res.steps) worst = std::max(worst, s.residual);
    c.check("deformation_step_residual", worst, 1e-8, "equation residual");
    if (b.rank() == 1) {
      const WeightFunction vt = deform_path(kind, res.steps.back().t);
      const Vec phi = curvature_package(b, res.steps.back().metric, g).phi.entry(0, 0).real();
      const Vec ref = g.sample([&](double mu) { return closed_form_line_moment(b.summand(0), vt, mu); });
      c.check("deformation_endpoint_vs_closed_form", (phi - ref).cwiseAbs().maxCoeff(), 1e-7,
              "closed-form moment profile");
    }
    j["deformation"] = res.to_json();
    j["deformation"]["path"] = kind;
  } else {
    throw ConfigError("mode must be line, continuity or deform");
  }
  write_report(c, "solve", j);
  return c.all_pass ? 0 : 2;
}

// Solved metric for lubke/Yang-Mills: closed form for line bundles, the
// continuity method otherwise.
MetricProfile solved_metric(const EquivariantBundle& b, const WeightFunction& v,
                            const SolverConfig& cfg) {
  const Grid g(cfg.grid);
  if (b.rank() == 1) return line_bundle_whe(b, v, g).metric;
  const SolveOutcome o = continuity_run(b, v, cfg);
  if (o.status != SolveStatus::converged)
    throw NoConvergence("no solved metric: continuity run ended " + status_name(o.status));
  return *o.metric;
}

json run_lubke(Ctx& c, const EquivariantBundle& b, const WeightFunction& v, int n,
               const SolverConfig& cfg, const std::string& tag) {
  const Grid g(cfg.grid);
  const MetricProfile h = solved_metric(b, v, cfg);
  const LubkeReport L = lubke_report(b, h, v, g, n);
  c.check(tag + "lubke_inequality", -L.gap, 1e-8, "char_square_numbers");
  if (b.rank() == 1) {
    c.check(tag + "line_equality", std::abs(L.gap), 1e-10, "rank one");
    c.check_flag(tag + "line_projectively_flat", L.projectively_flat, "rank one");
  }
  json j = {{"lubke", L.to_json()}};
  if (v.family() == WeightFamily::exponential || v.family() == WeightFamily::constant) {
    const YangMillsReport Y = yang_mills_report(b, h, v, g);
    c.check(tag + "yang_mills_bound_attained", std::abs(Y.bound_gap), 1e-6, "closed-form delta");
    double worst = Y.identity_residual;
    for (int k = 0; k < 10; ++k) {
      const MetricProfile hr = random_metric(b, g, c.seed + 17 * (k + 1), 0.3);
      worst = std::max(worst, yang_mills_report(b, hr, v, g).identity_residual);
    }
    c.check(tag + "yang_mills_identity", worst, 1e-6, "closed-form delta, random metrics");
    j["yang_mills"] = Y.to_json();
    j["yang_mills"]["identity_residual_random_max"] = worst;
  }
  return j;
}

int cmd_lubke(Ctx& c) {
  const auto b = bundle_of(c, kLine);
  const auto v = weight_of(c, kExp);
  json j = run_lubke(c, b, v, c.cfg.value("dimension", 1), solver_config(c), "");
  j["bundle"] = b.to_json();
  j["weight"] = v.params();
  write_report(c, "lubke", j);
  return c.all_pass ? 0 : 2;
}

json run_beta(Ctx& c, const EquivariantLineBundle& sub, bool liftable,
              const std::vector<double>& s_values, const std::string& tag) {
  const Grid g(c.grid);
  json rows = json::array();
  const bool standard = sub.degree == 1 && sub.w0 == 0 && sub.w1 == 1 && liftable;
  for (double s : s_values) {
    const BetaReport r = beta_invariant(sub, liftable, s, g);
    json row = r.to_json();
    row["s"] = s;
    if (standard) {
      const double expected = 2.0 / (std::exp(2 * s) + 1.0);
      row["closed_form"] = expected;
      c.check(tag + "beta(s=" + format_double(s) + ")", std::abs(r.beta - expected), 1e-8,
              "closed form 2/(e^{2s}+1)");
      if (s > 0) c.check_flag(tag + "beta_below_one(s=" + format_double(s) + ")", r.beta < 1, "obstruction");
    }
    rows.push_back(row);
  }
  json ext = json::array();
  for (double gamma : {0.0, prescribed_extension_gamma()}) {
    const ExtensionSolitonReport e = extension_soliton_check(gamma, g);
    c.check(tag + "extension_residual(gamma=" + format_double(gamma) + ")", e.residual, 1e-6,
            "target diag(1 - gamma^2/2pi, gamma^2/2pi)");
    c.check(tag + "extension_trace(gamma=" + format_double(gamma) + ")",
            std::abs(e.trace_integral - e.degree_tangent), 1e-8, "degree of the tangent bundle");
    c.check(tag + "extension_slope(gamma=" + format_double(gamma) + ")",
            std::abs(e.slope - e.slope_expected), 1e-12, "volume of c1");
    ext.push_back(e.to_json());
  }
  return {{"beta", rows}, {"extension", ext}, {"subsheaf", sub.describe()}, {"liftable", liftable}};
}

int cmd_beta(Ctx& c) {
  EquivariantLineBundle sub = EquivariantLineBundle::make(1, 0, 1);
  if (c.cfg.contains("subsheaf"))
    sub = EquivariantLineBundle::make(c.cfg["subsheaf"]["degree"].get<int>(),
                                      c.cfg["subsheaf"]["weights"][0].get<int>(),
                                      c.cfg["subsheaf"]["weights"][1].get<int>());
  const bool liftable = c.cfg.value("liftable", true);
  std::vector<double> s = {0.0, 0.5, 1.0};
  if (c.cfg.contains("s_values")) s = c.cfg["s_values"].get<std::vector<double>>();
  write_report(c, "beta", run_beta(c, sub, liftable, s, ""));
  return c.all_pass ? 0 : 2;
}

// ---------------------------------------------------------------------------

struct Named {
  std::string name;
  json spec;
};

std::vector<Named> example_bundles() {
  return {
      {"O1+O1 equal", json::parse(R"({"summands":[{"degree":1,"weights":[0,1]},{"degree":1,"weights":[0,1]}],"couplings":"none"})")},
      {"O1+O1 twisted", json::parse(R"({"summands":[{"degree":1,"weights":[0,1]},{"degree":1,"weights":[-1,0]}],"couplings":"none"})")},
      {"O0+O2 coupled", json::parse(R"({"summands":[{"degree":0,"weights":[0,0]},{"degree":2,"weights":[-1,1]}],"couplings":"auto"})")},
      {"O0+O0 lifted", json::parse(R"({"summands":[{"degree":0,"weights":[0,0]},{"degree":0,"weights":[1,1]}],"couplings":"auto"})")},
      {"rank3", json::parse(R"({"summands":[{"degree":1,"weights":[0,1]},{"degree":1,"weights":[0,1]},{"degree":1,"weights":[-1,0]}],"couplings":"none"})")},
      {"O1+O1 coupled", json::parse(R"({"summands":[{"degree":1,"weights":[0,1]},{"degree":1,"weights":[0,1]}],"couplings":"auto"})")}};
}

std::vector<Named> example_weights() {
  return {{"constant", json::parse(R"({"family":"constant","value":1})")},
          {"exp", json::parse(R"({"family":"exp","rate":1})")},
          {"poly", json::parse(R"({"family":"poly","factors":[{"c":1,"p":1,"n":2}]})")}};
}

int cmd_report_all(Ctx& c) {
  json j = json::object();
  const SolverConfig base = solver_config(c);

  json inter = json::array(), stab = json::array(), cont = json::array();
  for (const auto& [bn, bs] : example_bundles()) {
    const auto b = make_bundle(bs);
    for (const auto& [wn, ws] : example_weights()) {
      const auto v = make_weight(ws);
      const std::string tag = bn + " / " + wn + ": ";
      json e = run_intersect(c, b, v, nullptr, tag);
      e["name"] = bn + " / " + wn;
      inter.push_back(e);
      json s = run_stability(c, b, v, tag);
      s["name"] = bn + " / " + wn;
      stab.push_back(s);
      SolverConfig cfg = base;
      if (bs["couplings"] == "auto") cfg.initial = "random";
      std::string csv;
      json r = run_continuity(c, b, v, cfg, tag, nullptr, &csv);
      r["name"] = bn + " / " + wn;
      r.erase("trail");
      r["trail_length"] = std::count(csv.begin(), csv.end(), '\n') - 1;
      cont.push_back(r);
    }
  }
  j["intersections"] = inter;
  j["stability"] = stab;
  j["continuity"] = cont;

  // line bundles
  json lines = json::array();
  const std::vector<std::pair<std::string, std::string>> line_cases = {
      {R"({"summands":[{"degree":1,"weights":[0,1]}]})", R"({"family":"constant","value":1})"},
      {R"({"summands":[{"degree":1,"weights":[0,1]}]})", R"({"family":"exp","rate":1})"},
      {R"({"summands":[{"degree":0,"weights":[1,1]}]})", R"({"family":"exp","rate":1})"},
      {R"({"summands":[{"degree":2,"weights":[-1,1]}]})", R"({"family":"poly","factors":[{"c":1,"p":1,"n":2}]})"},
      {R"({"summands":[{"degree":3,"weights":[-1,2]}]})", R"({"family":"sasaki","xi":1,"a":2,"m":2})"},
      {R"({"summands":[{"degree":1,"weights":[0,1]}]})", R"({"family":"exp","rate":-2})"}};
  int li = 0;
  for (const auto& [bs, ws] : line_cases) {
    const auto b = make_bundle(json::parse(bs));
    const auto v = make_weight(json::parse(ws));
    const std::string tag = "line " + std::to_string(li) + ": ";
    json r = run_line(c, b, v, tag,
                      li == 1 ? std::optional<std::string>("line_profile.svg") : std::nullopt);
    r.erase("mu");
    r.erase("moment");
    r["bundle"] = b.to_json();
    r["weight"] = v.params();
    lines.push_back(r);
    ++li;
  }
  j["line_bundles"] = lines;

  // Euler expansion and Gieseker comparison
  {
    const auto b = make_bundle(example_bundles()[1].spec);
    const auto v = make_weight(example_weights()[1].spec);
    std::string csv;
    j["euler"] = run_gieseker(c, b, v, dyadic_range(64, 1024), "euler: ", &csv);
    write_side(c, "euler.csv", csv);
  }

  // Luebke and Yang-Mills
  {
    json lu = json::array();
    const auto ve = make_weight(json::parse(kExp));
    lu.push_back(run_lubke(c, make_bundle(json::parse(kLine)), ve, 1, base, "lubke line: "));
    lu.push_back(run_lubke(c, make_bundle(example_bundles()[0].spec), ve, 1, base, "lubke O1+O1: "));
    j["lubke"] = lu;
  }

  // Donaldson functional
  {
    const Grid g(base.grid);
    const auto b = make_bundle(example_bundles()[5].spec);
    const auto v = make_weight(json::parse(kExp));
    const MetricProfile h1 = random_metric(b, g, c.seed + 1, 0.3);
    const MetricProfile h2 = random_metric(b, g, c.seed + 2, 0.3);
    const MetricProfile h3 = random_metric(b, g, c.seed + 3, 0.3);
    const auto direct = donaldson_functional(b, v, h1, {h3}, g);
    const auto two_leg = donaldson_functional(b, v, h1, {h2, h3}, g);
    c.check("donaldson: cocycle", std::abs(direct.value - two_leg.value), 1e-7, "two paths");
    const MatrixProfile X =
        log_ratio(b, relative_matrix(b, h1, g), relative_matrix(b, h2, g), g);
    const ConvexitySample cv = geodesic_convexity(b, v, h1, X, 1.0, 9, g);
    c.check("donaldson: convexity", -cv.min, 1e-8, "second differences");
    SolverConfig cfg = base;
    cfg.initial = "random";
    const SolveOutcome o = continuity_run(b, v, cfg);
    double fv = 0;
    if (o.metric) {
      const MatrixProfile F = relative_matrix(b, *o.metric, g);
      fv = std::abs(donaldson_derivative(b, v, F, log_ratio(b, F, relative_matrix(b, h2, g), g), g));
    }
    c.check("donaldson: first_variation_at_solution", o.metric ? fv : INFINITY, 1e-7,
            "solved metric");
    j["donaldson"] = {{"direct", direct.value},
                      {"two_leg", two_leg.value},
                      {"convexity_min", cv.min},
                      {"first_variation", fv}};
  }

  j["beta"] = run_beta(c, EquivariantLineBundle::make(1, 0, 1), true, {0.0, 0.5, 1.0}, "beta: ");

  if (c.plot) {
    const Grid g(base.grid);
    const auto v = make_weight(json::parse(kExp));
    write_side(c, "weight.svg",
               emit_plot({{"exp(mu)", to_std(g.nodes()), to_std(v.values(g))}},
                         PlotKind::polytope_weight, "weight on the momentum interval"));
    const auto b = make_bundle(example_bundles()[1].spec);
    SolverConfig cfg = base;
    const SolveOutcome o = continuity_run(b, v, cfg);
    std::vector<double> e, m;
    for (const auto& s : o.trail) {
      e.push_back(s.epsilon);
      m.push_back(s.m_eps);
    }
    if (!e.empty())
      write_side(c, "convergence.svg",
                 emit_plot({{"m_eps", e, m}}, PlotKind::convergence, "m_eps against epsilon"));
  }

  write_report(c, "report-all", j);
  return c.all_pass ? 0 : 2;
}

int dispatch(Ctx& c) {
  if (c.command == "intersect") return cmd_intersect(c);
  if (c.command == "stability") return cmd_stability(c);
  if (c.command == "gieseker") return cmd_gieseker(c);
  if (c.command == "solve") return cmd_solve(c);
  if (c.command == "lubke") return cmd_lubke(c);
  if (c.command == "beta") return cmd_beta(c);
  if (c.command == "report-all") return cmd_report_all(c);
  throw ConfigError("unknown command " + c.command);
}

bool is_config_error(const Error& e) {
  return dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidBundle*>(&e) ||
         dynamic_cast<const UnsupportedCoupling*>(&e) || dynamic_cast<const NonPositiveWeight*>(&e) ||
         dynamic_cast<const NegativeTwist*>(&e) || dynamic_cast<const PreconditionWeight*>(&e) ||
         dynamic_cast<const WrongFamily*>(&e) || dynamic_cast<const DegenerateDenominator*>(&e);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weighted Hermite-Einstein toolkit"};
  app.require_subcommand(1);
  Ctx c;
  std::string config;
  bool seed_given = false, grid_given = false;
  for (const char* name : {"intersect", "stability", "gieseker", "solve", "lubke", "beta", "report-all"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "JSON configuration file");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--seed", c.seed, "seed for randomized checks")->each([&](const std::string&) {
      seed_given = true;
    });
    sub->add_option("--grid", c.grid, "number of quadrature nodes")->each([&](const std::string&) {
      grid_given = true;
    });
    sub->add_flag("--plot", c.plot, "write SVG plots");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  c.command = app.get_subcommands().front()->get_name();

  try {
    if (!config.empty()) {
      const std::string text = read_text_file(config);
      try {
        c.cfg = json::parse(text);
      } catch (const json::parse_error& e) {
        throw ConfigError(config + ": " + e.what());
      }
      const auto issues = validate_schema(c.cfg, builtin_schema("run_config"));
      if (!issues.empty()) {
        std::string msg = config + ": schema validation failed";
        for (const auto& i : issues) msg += "\n  " + i.path + ": " + i.message;
        throw ConfigError(msg);
      }
      if (!seed_given && c.cfg.contains("seed")) c.seed = c.cfg["seed"].get<std::uint64_t>();
      if (!grid_given && c.cfg.contains("grid")) c.grid = c.cfg["grid"].get<int>();
    }
    if (c.grid < 8) throw ConfigError("--grid must be >= 8");
    std::filesystem::create_directories(c.out);
    const int rc = dispatch(c);
    if (rc == 2) {
      for (const auto& ch : c.checks)
        if (!ch["pass"].get<bool>()) std::cerr << "check failed: " << ch["name"].get<std::string>() << "\n";
    }
    return rc;
  } catch (const NoConvergence& e) {
    std::cerr << "no convergence: " << e.what() << "\n";
    return 3;
  } catch (const NewtonDiverged& e) {
    std::cerr << "NewtonDiverged: " << e.what() << "\n";
    return 3;
  } catch (const DeformationStuck& e) {
    std::cerr << "DeformationStuck: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << e.kind() << ": " << e.what() << "\n";
    return is_config_error(e) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
