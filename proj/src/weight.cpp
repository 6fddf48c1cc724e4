#include "whe/weight.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "whe/errors.hpp"

namespace whe {

std::string family_name(WeightFamily f) {
  switch (f) {
    case WeightFamily::constant: return "constant";
    case WeightFamily::exponential: return "exp";
    case WeightFamily::sasaki: return "sasaki";
    case WeightFamily::polynomial: return "poly";
    case WeightFamily::table: return "table";
  }
  return "unknown";
}

class WeightFunction::Impl {
 public:
  virtual ~Impl() = default;
  virtual double value(double) const = 0;
  virtual double grad(double) const = 0;
  virtual double hess(double) const = 0;
  virtual double integral(double a, double b) const = 0;
  virtual bool valid_on(double a, double b) const = 0;
  virtual WeightFamily family() const = 0;
  virtual nlohmann::json params() const = 0;
};

namespace {

double quad(const WeightFunction::Impl& w, double a, double b) {
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(256);
  gsl_function fn;
  fn.function = [](double x, void* p) {
    return static_cast<const WeightFunction::Impl*>(p)->value(x);
  };
  fn.params = const_cast<WeightFunction::Impl*>(&w);
  double res = 0, err = 0;
  gsl_integration_qag(&fn, a, b, 1e-14, 1e-13, 256, GSL_INTEG_GAUSS61, ws, &res, &err);
  gsl_integration_workspace_free(ws);
  return res;
}

class Constant final : public WeightFunction::Impl {
 public:
  explicit Constant(double c) : c_(c) {}
  double value(double) const override { return c_; }
  double grad(double) const override { return 0.0; }
  double hess(double) const override { return 0.0; }
  double integral(double a, double b) const override { return c_ * (b - a); }
  bool valid_on(double, double) const override { return c_ > 0; }
  WeightFamily family() const override { return WeightFamily::constant; }
  nlohmann::json params() const override { return {{"value", c_}}; }

 private:
  double c_;
};

class Exponential final : public WeightFunction::Impl {
 public:
  Exponential(double rate, double scale) : r_(rate), s_(scale) {}
  double value(double mu) const override { return s_ * std::exp(r_ * mu); }
  double grad(double mu) const override { return r_ * value(mu); }
  double hess(double mu) const override { return r_ * r_ * value(mu); }
  double integral(double a, double b) const override {
    if (r_ == 0.0) return s_ * (b - a);
    return s_ * std::exp(r_ * a) * std::expm1(r_ * (b - a)) / r_;
  }
  bool valid_on(double, double) const override { return s_ > 0; }
  WeightFamily family() const override { return WeightFamily::exponential; }
  nlohmann::json params() const override { return {{"rate", r_}, {"scale", s_}}; }
  double rate() const { return r_; }

 private:
  double r_, s_;
};

// (xi*mu + a)^(-m)
class Sasaki final : public WeightFunction::Impl {
 public:
  Sasaki(double xi, double a, double m) : xi_(xi), a_(a), m_(m) {}
  double base(double mu) const { return xi_ * mu + a_; }
  double value(double mu) const override { return std::pow(base(mu), -m_); }
  double grad(double mu) const override { return -m_ * xi_ * std::pow(base(mu), -m_ - 1); }
  double hess(double mu) const override {
    return m_ * (m_ + 1) * xi_ * xi_ * std::pow(base(mu), -m_ - 2);
  }
  double integral(double a, double b) const override {
    if (xi_ == 0.0) return value(0) * (b - a);
    if (m_ == 1.0) return (std::log(base(b)) - std::log(base(a))) / xi_;
    const double e = 1.0 - m_;
    return (std::pow(base(b), e) - std::pow(base(a), e)) / (xi_ * e);
  }
  bool valid_on(double a, double b) const override { return base(a) > 0 && base(b) > 0; }
  WeightFamily family() const override { return WeightFamily::sasaki; }
  nlohmann::json params() const override { return {{"xi", xi_}, {"a", a_}, {"m", m_}}; }

 private:
  double xi_, a_, m_;
};

// prod (c + p mu)^n
class Polynomial final : public WeightFunction::Impl {
 public:
  explicit Polynomial(std::vector<PolyFactor> f) : f_(std::move(f)) {
    integer_ = true;
    for (const auto& x : f_)
      if (x.n < 0 || x.n != std::floor(x.n) || x.n > 64) integer_ = false;
    if (integer_) {
      coeffs_ = {1.0};
      for (const auto& x : f_)
        for (int k = 0; k < static_cast<int>(x.n); ++k) {
          std::vector<double> next(coeffs_.size() + 1, 0.0);
          for (size_t i = 0; i < coeffs_.size(); ++i) {
            next[i] += x.c * coeffs_[i];
            next[i + 1] += x.p * coeffs_[i];
          }
          coeffs_ = std::move(next);
        }
    }
  }
  double value(double mu) const override {
    double v = 1.0;
    for (const auto& x : f_) v *= std::pow(x.c + x.p * mu, x.n);
    return v;
  }
  double grad(double mu) const override { return value(mu) * s1(mu); }
  double hess(double mu) const override {
    const double a = s1(mu);
    double b = 0;
    for (const auto& x : f_) {
      const double q = x.p / (x.c + x.p * mu);
      b += x.n * q * q;
    }
    return value(mu) * (a * a - b);
  }
  double integral(double a, double b) const override {
    if (!integer_) return quad(*this, a, b);
    double s = 0;
    for (size_t i = coeffs_.size(); i-- > 0;) {
      const double k = static_cast<double>(i + 1);
      s += coeffs_[i] * (std::pow(b, k) - std::pow(a, k)) / k;
    }
    return s;
  }
  bool valid_on(double a, double b) const override {
    for (const auto& x : f_)
      if (x.c + x.p * a <= 0 || x.c + x.p * b <= 0) return false;
    return true;
  }
  WeightFamily family() const override { return WeightFamily::polynomial; }
  nlohmann::json params() const override {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& x : f_) arr.push_back({{"c", x.c}, {"p", x.p}, {"n", x.n}});
    return {{"factors", arr}};
  }

 private:
  double s1(double mu) const {
    double s = 0;
    for (const auto& x : f_) s += x.n * x.p / (x.c + x.p * mu);
    return s;
  }
  std::vector<PolyFactor> f_;
  bool integer_ = false;
  std::vector<double> coeffs_;
};

// Cubic spline with not-a-knot end conditions; extrapolates with end cubics.
class Table final : public WeightFunction::Impl {
 public:
  Table(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const int n = static_cast<int>(x_.size());
    if (n < 4 || y_.size() != x_.size())
      throw ConfigError("table weight needs >= 4 points and matching x/y lengths");
    for (int i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1])) throw ConfigError("table weight x must be strictly increasing");
    if (x_.front() > 0.0 || x_.back() < 1.0)
      throw ConfigError("table weight must cover [0,1]");
    Mat A = Mat::Zero(n, n);
    Vec r = Vec::Zero(n);
    std::vector<double> h(n - 1);
    for (int i = 0; i + 1 < n; ++i) h[i] = x_[i + 1] - x_[i];
    // third derivative continuous across the first and last interior knots
    A(0, 0) = -h[1];
    A(0, 1) = h[0] + h[1];
    A(0, 2) = -h[0];
    A(n - 1, n - 3) = -h[n - 2];
    A(n - 1, n - 2) = h[n - 3] + h[n - 2];
    A(n - 1, n - 1) = -h[n - 3];
    for (int i = 1; i + 1 < n; ++i) {
      A(i, i - 1) = h[i - 1];
      A(i, i) = 2 * (h[i - 1] + h[i]);
      A(i, i + 1) = h[i];
      r[i] = 6 * ((y_[i + 1] - y_[i]) / h[i] - (y_[i] - y_[i - 1]) / h[i - 1]);
    }
    Vec m = A.fullPivLu().solve(r);
    m2_.assign(m.data(), m.data() + n);
  }
  double value(double mu) const override { return eval(mu, 0); }
  double grad(double mu) const override { return eval(mu, 1); }
  double hess(double mu) const override { return eval(mu, 2); }
  double integral(double a, double b) const override {
    if (a > b) return -integral(b, a);
    double s = 0;
    const int n = static_cast<int>(x_.size());
    for (int i = 0; i + 1 < n; ++i) {
      double lo = (i == 0) ? std::min(a, x_[0]) : x_[i];
      double hi = (i + 2 == n) ? std::max(b, x_[n - 1]) : x_[i + 1];
      lo = std::max(lo, a);
      hi = std::min(hi, b);
      if (hi > lo) s += piece_antideriv(i, hi) - piece_antideriv(i, lo);
    }
    return s;
  }
  bool valid_on(double a, double b) const override {
    for (int i = 0; i <= 200; ++i)
      if (value(a + (b - a) * i / 200.0) <= 0) return false;
    return true;
  }
  WeightFamily family() const override { return WeightFamily::table; }
  nlohmann::json params() const override { return {{"x", x_}, {"y", y_}}; }

 private:
  int piece(double mu) const {
    const int n = static_cast<int>(x_.size());
    int i = 0;
    while (i + 2 < n && mu > x_[i + 1]) ++i;
    return i;
  }
  // piece i as cubic in local s = mu - x_i: y + b s + c s^2 + d s^3
  void coeffs(int i, double& a0, double& a1, double& a2, double& a3) const {
    const double h = x_[i + 1] - x_[i];
    a0 = y_[i];
    a1 = (y_[i + 1] - y_[i]) / h - h * (2 * m2_[i] + m2_[i + 1]) / 6;
    a2 = m2_[i] / 2;
    a3 = (m2_[i + 1] - m2_[i]) / (6 * h);
  }
  double eval(double mu, int order) const {
    const int i = piece(mu);
    double a0, a1, a2, a3;
    coeffs(i, a0, a1, a2, a3);
    const double s = mu - x_[i];
    if (order == 0) return a0 + s * (a1 + s * (a2 + s * a3));
    if (order == 1) return a1 + s * (2 * a2 + 3 * a3 * s);
    return 2 * a2 + 6 * a3 * s;
  }
  double piece_antideriv(int i, double mu) const {
    double a0, a1, a2, a3;
    coeffs(i, a0, a1, a2, a3);
    const double s = mu - x_[i];
    return s * (a0 + s * (a1 / 2 + s * (a2 / 3 + s * a3 / 4)));
  }
  std::vector<double> x_, y_, m2_;
};

WeightFunction validated(std::shared_ptr<const WeightFunction::Impl> impl) {
  for (int i = 0; i <= 1000; ++i) {
    const double mu = i / 1000.0;
    const double v = impl->value(mu);
    if (!(v > 0) || !std::isfinite(v)) {
      std::ostringstream os;
      os << family_name(impl->family()) << " weight is not positive at mu=" << mu
         << " (value " << v << ")";
      throw NonPositiveWeight(os.str());
    }
  }
  return WeightFunction(std::move(impl));
}

}  // namespace

double WeightFunction::value(double mu) const { return impl_->value(mu); }
double WeightFunction::grad(double mu) const { return impl_->grad(mu); }
double WeightFunction::hess(double mu) const { return impl_->hess(mu); }
double WeightFunction::integral(double a, double b) const { return impl_->integral(a, b); }
bool WeightFunction::formula_valid_on(double a, double b) const { return impl_->valid_on(a, b); }
WeightFamily WeightFunction::family() const { return impl_->family(); }

nlohmann::json WeightFunction::params() const {
  nlohmann::json j = impl_->params();
  j["family"] = family_name(family());
  return j;
}

std::string WeightFunction::describe() const { return params().dump(); }

Vec WeightFunction::values(const Grid& g) const {
  return g.sample([this](double x) { return value(x); });
}
Vec WeightFunction::grads(const Grid& g) const {
  return g.sample([this](double x) { return grad(x); });
}
Vec WeightFunction::hessians(const Grid& g) const {
  return g.sample([this](double x) { return hess(x); });
}

WeightFunction constant_weight(double c) { return validated(std::make_shared<Constant>(c)); }
WeightFunction exp_weight(double rate, double scale) {
  return validated(std::make_shared<Exponential>(rate, scale));
}
WeightFunction sasaki_weight(double xi, double a, double m) {
  auto s = std::make_shared<Sasaki>(xi, a, m);
  if (!s->valid_on(0.0, 1.0))
    throw NonPositiveWeight("sasaki weight: xi*mu + a must be positive on [0,1]");
  return validated(std::move(s));
}
WeightFunction poly_weight(std::vector<PolyFactor> factors) {
  if (factors.empty()) throw ConfigError("poly weight needs at least one factor");
  return validated(std::make_shared<Polynomial>(std::move(factors)));
}
WeightFunction table_weight(std::vector<double> x, std::vector<double> y) {
  return validated(std::make_shared<Table>(std::move(x), std::move(y)));
}

namespace {
double num(const nlohmann::json& j, const char* key, double dflt, bool required = false) {
  if (!j.contains(key)) {
    if (required) throw ConfigError(std::string("weight: missing field '") + key + "'");
    return dflt;
  }
  if (!j.at(key).is_number())
    throw ConfigError(std::string("weight: field '") + key + "' must be a number");
  return j.at(key).get<double>();
}
}  // namespace

WeightFunction make_weight(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("family") || !spec["family"].is_string())
    throw ConfigError("weight: expected an object with a string 'family'");
  const std::string fam = spec["family"];
  if (fam == "constant") return constant_weight(num(spec, "value", 1.0));
  if (fam == "exp") return exp_weight(num(spec, "rate", 0.0, true), num(spec, "scale", 1.0));
  if (fam == "sasaki")
    return sasaki_weight(num(spec, "xi", 0.0, true), num(spec, "a", 0.0, true),
                         num(spec, "m", 1.0));
  if (fam == "poly") {
    if (!spec.contains("factors") || !spec["factors"].is_array())
      throw ConfigError("weight: poly needs a 'factors' array");
    std::vector<PolyFactor> fs;
    for (const auto& f : spec["factors"])
      fs.push_back({num(f, "c", 1.0), num(f, "p", 0.0), num(f, "n", 1.0)});
    return poly_weight(std::move(fs));
  }
  if (fam == "table") {
    if (!spec.contains("x") || !spec.contains("y"))
      throw ConfigError("weight: table needs 'x' and 'y'");
    return table_weight(spec["x"].get<std::vector<double>>(), spec["y"].get<std::vector<double>>());
  }
  throw ConfigError("weight: unknown family '" + fam + "'");
}

HessianCheck hessian_condition_check(const WeightFunction& v, int n, const Grid& g, double tol) {
  if (n < 1) throw ConfigError("hessian check: dimension must be >= 1");
  HessianCheck out;
  const int N = g.size();
  out.mu.resize(N + 2);
  out.mu[0] = 0.0;
  out.mu.segment(1, N) = g.nodes();
  out.mu[N + 1] = 1.0;
  out.margin.resize(N + 2);
  out.max_margin = -std::numeric_limits<double>::infinity();
  out.max_log_hessian = -std::numeric_limits<double>::infinity();
  const double k = (n + 1.0) / n;
  for (int i = 0; i < N + 2; ++i) {
    const double x = out.mu[i], a = v.value(x), b = v.grad(x), c = v.hess(x);
    out.margin[i] = c - k * b * b / a;
    out.max_margin = std::max(out.max_margin, out.margin[i]);
    out.max_log_hessian = std::max(out.max_log_hessian, c / a - (b / a) * (b / a));
  }
  out.holds = out.max_margin <= tol;
  out.log_concave = out.max_log_hessian <= tol;
  return out;
}

}  // namespace whe
