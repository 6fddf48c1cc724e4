#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "whe/weight.hpp"

namespace whe {

using Symbol = std::function<std::complex<double>(std::complex<double>)>;

struct FourierOptions {
  double step = 0.7853981633974483;  // frequency spacing; period of the sampling box is 2 pi/step
  double cutoff = 6000.0;            // |xi| <= cutoff
  double margin = 0.5;               // width of the smooth window outside [0,1]
  double tau = 1e-6;                 // round-trip tolerance
  int check_points = 201;
};

// Windowed extension of a weight and its sampled Fourier transform
// u_hat(xi) = (1/2 pi) int u(x) e^{-i xi x} dx on xi_n = n * step.
class FourierData {
 public:
  FourierData(const WeightFunction& v, const FourierOptions& opt = {});

  double extension(double x) const;
  // int B(xi) u_hat(xi) dxi for a symbol with B(-xi) = conj(B(xi)).
  double pair(const Symbol& B) const;
  // Tail contribution over cutoff/2 < |xi| <= cutoff.
  double truncation_estimate(const Symbol& B) const;
  // Same pairing evaluated through analytic continuation for the
  // exponential family; empty otherwise.
  std::optional<double> analytic_pair(const Symbol& B) const;
  // Inverse transform at a point.
  double inverse(double x) const;

  double roundtrip_error() const { return roundtrip_error_; }
  double margin_used() const { return margin_; }
  double decay_constant_head() const { return decay_head_; }
  double decay_constant_tail() const { return decay_tail_; }
  const std::vector<double>& frequencies() const { return xi_; }
  const std::vector<std::complex<double>>& transform() const { return fhat_; }
  const FourierOptions& options() const { return opt_; }

 private:
  WeightFunction v_;
  FourierOptions opt_;
  double margin_ = 0;
  std::vector<double> xi_;                   // n = 0..nmax
  std::vector<std::complex<double>> fhat_;   // same indexing
  double roundtrip_error_ = 0;
  double decay_head_ = 0, decay_tail_ = 0;
};

namespace symbols {
Symbol volume();
Symbol point(double a);                      // e^{i xi a}
Symbol first_chern(double w0, double w1);    // w1 e^{i xi} - w0
Symbol derivative_jump(double a0, double a1);  // i xi (a1 e^{i xi} - a0)
}  // namespace symbols

}  // namespace whe
