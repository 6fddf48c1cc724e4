#include "whe/grid.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace whe {

Grid::Grid(int n) {
  if (n < 2) throw std::invalid_argument("grid needs at least 2 nodes");
  auto d = std::make_shared<Data>();
  gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(n);
  std::vector<std::pair<double, double>> pts(n);
  for (int i = 0; i < n; ++i) {
    double x = 0, w = 0;
    gsl_integration_glfixed_point(-1.0, 1.0, i, &x, &w, t);
    pts[i] = {x, w};
  }
  gsl_integration_glfixed_table_free(t);
  std::sort(pts.begin(), pts.end());

  d->nodes.resize(n);
  d->weights.resize(n);
  d->sigma.resize(n);
  d->bary.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto [x, w] = pts[i];
    d->nodes[i] = 0.5 * (x + 1.0);
    d->weights[i] = 0.5 * w;
    d->sigma[i] = sigma_of(d->nodes[i]);
    // barycentric weights of Gauss-Legendre points
    d->bary[i] = ((i % 2) ? -1.0 : 1.0) * std::sqrt((1.0 - x * x) * w);
  }

  d->diff = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double rowsum = 0;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double v = (d->bary[j] / d->bary[i]) / (d->nodes[i] - d->nodes[j]);
      d->diff(i, j) = v;
      rowsum += v;
    }
    d->diff(i, i) = -rowsum;
  }
  d->sigma_diff = d->sigma.asDiagonal() * d->diff;
  for (int i = 0; i < n; ++i) d->sigma_diff(i, i) += 1.0 - 2.0 * d->nodes[i];
  d_ = std::move(d);
}

Vec Grid::sample(const std::function<double(double)>& fn) const {
  Vec out(size());
  for (int i = 0; i < size(); ++i) out[i] = fn(d_->nodes[i]);
  return out;
}

Vec Grid::interpolation_row(double x) const {
  const int n = size();
  Vec row = Vec::Zero(n);
  for (int j = 0; j < n; ++j) {
    if (x == d_->nodes[j]) {
      row[j] = 1.0;
      return row;
    }
  }
  double den = 0;
  for (int j = 0; j < n; ++j) {
    row[j] = d_->bary[j] / (x - d_->nodes[j]);
    den += row[j];
  }
  return row / den;
}

double Grid::interpolate(const Vec& f, double x) const {
  return interpolation_row(x).dot(f);
}

}  // namespace whe
