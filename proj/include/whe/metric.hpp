#pragma once

#include <complex>
#include <vector>

#include "whe/bundle.hpp"
#include "whe/grid.hpp"
#include "whe/weight.hpp"

namespace whe {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

// Matrix-valued profile, one r x r matrix per grid node, expressed in the
// invariant frame e_i z^{-w0_i}.
struct MatrixProfile {
  std::vector<CMat> at;

  MatrixProfile() = default;
  MatrixProfile(int nodes, int rank) : at(nodes, CMat::Zero(rank, rank)) {}

  int size() const { return static_cast<int>(at.size()); }
  int rank() const { return at.empty() ? 0 : static_cast<int>(at[0].rows()); }
  CVec entry(int i, int j) const;
  void set_entry(int i, int j, const CVec& e);
  Vec trace_real() const;
  MatrixProfile derivative(const Grid& g) const;
  // Entrywise application of a nodal operator.
  MatrixProfile apply(const Mat& op) const;
};

// Invariant Hermitian metric relative to the reference metric: diag[i] is the
// factor on summand i and offdiag[c] the coefficient attached to coupling c.
struct MetricProfile {
  std::vector<Vec> diag;
  std::vector<CVec> offdiag;
};

struct CurvaturePackage {
  MatrixProfile rho;  // mean curvature density
  MatrixProfile phi;  // bundle moment map
};

MetricProfile reference_metric(const EquivariantBundle& b, const Grid& g);
MetricProfile conformal(const MetricProfile& m, const Vec& u);  // e^u h

// Relative endomorphism F = h_ref^{-1} h in the invariant frame.
MatrixProfile relative_matrix(const EquivariantBundle& b, const MetricProfile& m, const Grid& g);
MetricProfile metric_from_relative(const EquivariantBundle& b, const MatrixProfile& F);

// sqrt(h_ref,i / h_ref,j): conjugating by these ratios moves invariant-frame
// matrices to a reference-unitary frame.
Mat frame_ratio(const EquivariantBundle& b, double mu);

// Throws NonPositiveMetric with the failing node.
void check_positive(const EquivariantBundle& b, const MetricProfile& m, const Grid& g);

// Express h-self-adjoint invariant-frame endomorphisms in an h-unitary frame.
MatrixProfile to_unitary(const EquivariantBundle& b, const MetricProfile& m, const Grid& g,
                         const MatrixProfile& A);

CurvaturePackage curvature_package(const EquivariantBundle& b, const MetricProfile& m,
                                   const Grid& g);
CurvaturePackage curvature_from_relative(const EquivariantBundle& b, const MatrixProfile& F,
                                         const Grid& g);

MatrixProfile weighted_contraction(const CurvaturePackage& pkg, const WeightFunction& v,
                                   const Grid& g);

// -2 pi d/dmu(sigma v f')
Vec weighted_laplacian(const WeightFunction& v, const Vec& f, const Grid& g);
Mat weighted_laplacian_matrix(const WeightFunction& v, const Grid& g);

// Invariant End(E)-valued 1-form reduced to its d(mu) and d(theta) components.
struct OneFormProfile {
  MatrixProfile dmu;
  MatrixProfile dtheta;
};

double weighted_atiyah_bott_pairing(const WeightFunction& v, const OneFormProfile& a,
                                    const OneFormProfile& b, const Grid& g);

}  // namespace whe
