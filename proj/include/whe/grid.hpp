#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>

namespace whe {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double sigma_of(double mu) { return mu * (1.0 - mu); }

// Gauss-Legendre collocation on the momentum interval [0,1]. The pushforward
// of the area form is Lebesgue measure, total mass 1.
class Grid {
 public:
  explicit Grid(int n);

  int size() const { return static_cast<int>(d_->nodes.size()); }
  const Vec& nodes() const { return d_->nodes; }
  const Vec& weights() const { return d_->weights; }
  const Vec& sigma() const { return d_->sigma; }
  const Mat& diff() const { return d_->diff; }
  const Vec& bary() const { return d_->bary; }
  // Derivative of sigma * p given samples of p; exact on polynomials and
  // free of the aliasing a plain diff() of the product would pick up.
  const Mat& sigma_diff() const { return d_->sigma_diff; }

  double integrate(const Vec& f) const { return d_->weights.dot(f); }
  Vec derivative(const Vec& f) const { return d_->diff * f; }
  Vec sample(const std::function<double(double)>& fn) const;

  // Value of the interpolating polynomial at an arbitrary point.
  double interpolate(const Vec& f, double x) const;
  // Row vector r with r.dot(f) = interpolant(x).
  Vec interpolation_row(double x) const;

 private:
  struct Data {
    Vec nodes, weights, sigma, bary;
    Mat diff, sigma_diff;
  };
  std::shared_ptr<const Data> d_;
};

}  // namespace whe
