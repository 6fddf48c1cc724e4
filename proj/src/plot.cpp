#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "whe/errors.hpp"
#include "whe/io.hpp"

namespace whe {

namespace {

constexpr double kW = 640, kH = 400;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double x, const char* spec = "%.2f") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, x);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

double nice_step(double span, int target) {
  const double raw = span / target;
  const double p = std::pow(10.0, std::floor(std::log10(raw)));
  const double m = raw / p;
  return (m < 1.5 ? 1 : m < 3.5 ? 2 : m < 7.5 ? 5 : 10) * p;
}

struct Axis {
  double lo, hi;
  bool log;
  std::vector<double> ticks;  // in data units

  double map(double v) const {
    const double a = log ? std::log10(v) : v;
    const double l = log ? std::log10(lo) : lo, h = log ? std::log10(hi) : hi;
    return (a - l) / (h - l);
  }
};

Axis make_axis(double lo, double hi, bool log) {
  Axis ax{lo, hi, log, {}};
  if (log) {
    lo = std::pow(10.0, std::floor(std::log10(lo)));
    hi = std::pow(10.0, std::ceil(std::log10(hi)));
    if (hi <= lo) hi = lo * 10;
    ax.lo = lo;
    ax.hi = hi;
    for (double t = lo; t <= hi * 1.0000001; t *= 10) ax.ticks.push_back(t);
    return ax;
  }
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double step = nice_step(hi - lo, 5);
  ax.lo = std::floor(lo / step) * step;
  ax.hi = std::ceil(hi / step) * step;
  const int n = static_cast<int>(std::lround((ax.hi - ax.lo) / step));
  for (int i = 0; i <= n; ++i) ax.ticks.push_back(ax.lo + i * step);
  return ax;
}

std::string tick_label(double t, bool log) {
  if (log) return fmt(t, "%.0e");
  return fmt(t, std::abs(t) >= 1000 ? "%.0f" : "%.2f");
}

}  // namespace

std::string emit_plot(const std::vector<PlotSeries>& series, PlotKind kind,
                      const std::string& title) {
  if (series.empty()) throw EmptySeries("plot needs at least one series");
  for (const auto& s : series) {
    if (s.x.empty() || s.x.size() != s.y.size())
      throw EmptySeries("series '" + s.label + "' is empty or has mismatched lengths");
  }
  const bool log = kind == PlotKind::convergence;
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (log && (s.x[i] <= 0 || s.y[i] <= 0)) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  if (!std::isfinite(xlo)) throw EmptySeries("no plottable points");
  if (kind == PlotKind::polytope_weight) {
    xlo = std::min(xlo, 0.0);
    xhi = std::max(xhi, 1.0);
    ylo = std::min(ylo, 0.0);
  }
  const Axis ax = make_axis(xlo, xhi, log), ay = make_axis(ylo, yhi, log);
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto X = [&](double v) { return kLeft + pw * ax.map(v); };
  auto Y = [&](double v) { return kTop + ph * (1 - ay.map(v)); };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
       "viewBox=\"0 0 640 400\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
  o += "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) +
       "</text>\n";
  // frame and ticks
  o += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(pw) +
       "\" height=\"" + fmt(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ax.ticks) {
    const double x = X(t);
    o += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(kTop + ph) + "\" x2=\"" + fmt(x) + "\" y2=\"" +
         fmt(kTop + ph + 5) + "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(kTop + ph + 18) +
         "\" text-anchor=\"middle\">" + tick_label(t, log) + "</text>\n";
  }
  for (double t : ay.ticks) {
    const double y = Y(t);
    o += "<line x1=\"" + fmt(kLeft - 5) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(kLeft) +
         "\" y2=\"" + fmt(y) + "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + fmt(kLeft - 8) + "\" y=\"" + fmt(y + 4) + "\" text-anchor=\"end\">" +
         tick_label(t, log) + "</text>\n";
  }
  if (kind == PlotKind::polytope_weight) {
    // the polytope [0,1] on the axis
    o += "<line x1=\"" + fmt(X(0)) + "\" y1=\"" + fmt(Y(ay.lo)) + "\" x2=\"" + fmt(X(1)) +
         "\" y2=\"" + fmt(Y(ay.lo)) + "\" stroke=\"#444\" stroke-width=\"4\"/>\n";
  }
  if (kind == PlotKind::convergence) {
    const auto& s = series.front();
    size_t i0 = 0;
    while (i0 < s.x.size() && (s.x[i0] <= 0 || s.y[i0] <= 0)) ++i0;
    if (i0 < s.x.size()) {
      const double k = s.x[i0] * s.y[i0];
      double a = ax.lo, b = ax.hi;
      a = std::max(a, k / ay.hi);
      b = std::min(b, k / ay.lo);
      if (a < b)
        o += "<line x1=\"" + fmt(X(a)) + "\" y1=\"" + fmt(Y(k / a)) + "\" x2=\"" + fmt(X(b)) +
             "\" y2=\"" + fmt(Y(k / b)) + "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
    }
  }
  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* col = kColors[si % 6];
    std::string pts;
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (log && (s.x[i] <= 0 || s.y[i] <= 0)) continue;
      if (!pts.empty()) pts += " ";
      pts += fmt(X(s.x[i])) + "," + fmt(Y(s.y[i]));
    }
    o += "<polyline fill=\"none\" stroke=\"" + std::string(col) + "\" stroke-width=\"1.5\" points=\"" +
         pts + "\"/>\n";
    const double ly = kTop + 14 + 14 * si;
    o += "<line x1=\"" + fmt(kLeft + pw - 150) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" +
         fmt(kLeft + pw - 130) + "\" y2=\"" + fmt(ly - 4) + "\" stroke=\"" + col + "\"/>\n";
    o += "<text x=\"" + fmt(kLeft + pw - 125) + "\" y=\"" + fmt(ly) + "\">" + escape(s.label) +
         "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

}  // namespace whe
