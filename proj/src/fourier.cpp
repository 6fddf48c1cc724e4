#include "whe/fourier.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "whe/errors.hpp"

namespace whe {

namespace {

using cplx = std::complex<double>;

double g_edge(double x) { return x <= 0 ? 0.0 : std::exp(-1.0 / x); }

// C-infinity step: 0 for t <= 0, 1 for t >= 1.
double smoothstep(double t) {
  if (t <= 0) return 0.0;
  if (t >= 1) return 1.0;
  const double a = g_edge(t), b = g_edge(1.0 - t);
  return a / (a + b);
}

}  // namespace

FourierData::FourierData(const WeightFunction& v, const FourierOptions& opt) : v_(v), opt_(opt) {
  if (!(opt.step > 0) || !(opt.cutoff > 0)) throw ConfigError("fourier: step and cutoff must be > 0");
  // The window must sit where the closed-form weight is defined.
  margin_ = opt.margin;
  while (!v.formula_valid_on(-2 * margin_, 1 + 2 * margin_)) {
    margin_ *= 0.5;
    if (margin_ < 1e-3) throw InversionMismatch("fourier: no valid extension margin for weight");
  }

  const double L = 2 * std::numbers::pi / opt.step;
  if (L < 1 + 2 * margin_ + 1) throw ConfigError("fourier: step too coarse for the window");
  int M = 2;
  while (std::numbers::pi * M / L < opt.cutoff) M *= 2;
  const double dx = L / M;
  const double x0 = 0.5 - L / 2;

  std::vector<double> samples(M);
  for (int j = 0; j < M; ++j) samples[j] = extension(x0 + j * dx);

  std::vector<fftw_complex> out(M / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(M, samples.data(), out.data(), FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  const int nmax = static_cast<int>(std::floor(opt.cutoff / opt.step));
  xi_.resize(nmax + 1);
  fhat_.resize(nmax + 1);
  for (int n = 0; n <= nmax; ++n) {
    const double xi = n * opt.step;
    xi_[n] = xi;
    const cplx raw(out[n][0], out[n][1]);
    fhat_[n] = raw * std::exp(cplx(0, -xi * x0)) * (dx / (2 * std::numbers::pi));
  }

  double err = 0;
  for (int i = 0; i < opt.check_points; ++i) {
    const double x = static_cast<double>(i) / (opt.check_points - 1);
    err = std::max(err, std::abs(inverse(x) - v.value(x)));
  }
  roundtrip_error_ = err;

  decay_head_ = decay_tail_ = 0;
  for (int n = 0; n <= nmax; ++n) {
    const double c = std::abs(fhat_[n]) * std::pow(1 + xi_[n], 4);
    if (xi_[n] < opt.cutoff / 2)
      decay_head_ = std::max(decay_head_, c);
    else
      decay_tail_ = std::max(decay_tail_, c);
  }

  if (roundtrip_error_ > opt.tau) {
    std::ostringstream os;
    os << "fourier round trip error " << roundtrip_error_ << " exceeds " << opt.tau;
    throw InversionMismatch(os.str());
  }
}

double FourierData::extension(double x) const {
  if (x >= 0 && x <= 1) return v_.value(x);
  double w;
  if (x < 0)
    w = smoothstep((x + margin_) / margin_);
  else
    w = smoothstep((1 + margin_ - x) / margin_);
  return w == 0.0 ? 0.0 : w * v_.value(x);
}

double FourierData::pair(const Symbol& B) const {
  double s = (B(0.0) * fhat_[0]).real();
  for (size_t n = fhat_.size(); n-- > 1;) s += 2 * (B(xi_[n]) * fhat_[n]).real();
  return s * opt_.step;
}

double FourierData::truncation_estimate(const Symbol& B) const {
  double s = 0;
  for (size_t n = 1; n < fhat_.size(); ++n)
    if (xi_[n] > opt_.cutoff / 2) s += 2 * std::abs(B(xi_[n]) * fhat_[n]);
  return s * opt_.step;
}

std::optional<double> FourierData::analytic_pair(const Symbol& B) const {
  if (v_.family() != WeightFamily::exponential) return std::nullopt;
  const auto p = v_.params();
  const double rate = p["rate"], scale = p["scale"];
  // v = scale * e^{rate mu} is a single frequency at xi = -i rate.
  return (scale * B(cplx(0, -rate))).real();
}

double FourierData::inverse(double x) const {
  double s = fhat_[0].real();
  for (size_t n = fhat_.size(); n-- > 1;)
    s += 2 * (fhat_[n] * std::exp(cplx(0, xi_[n] * x))).real();
  return s * opt_.step;
}

namespace symbols {

Symbol volume() {
  return [](cplx xi) -> cplx {
    if (std::abs(xi) < 1e-8) return cplx(1.0) + cplx(0, 0.5) * xi;
    return (std::exp(cplx(0, 1) * xi) - 1.0) / (cplx(0, 1) * xi);
  };
}

Symbol point(double a) {
  return [a](cplx xi) { return std::exp(cplx(0, 1) * xi * a); };
}

Symbol first_chern(double w0, double w1) {
  return [w0, w1](cplx xi) { return w1 * std::exp(cplx(0, 1) * xi) - w0; };
}

Symbol derivative_jump(double a0, double a1) {
  return [a0, a1](cplx xi) {
    return cplx(0, 1) * xi * (a1 * std::exp(cplx(0, 1) * xi) - a0);
  };
}

}  // namespace symbols

}  // namespace whe
