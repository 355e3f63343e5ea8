#pragma once

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "infotrans/types.hpp"

namespace infotrans {

/// Eigenvalues below -kPsdTolerance make a covariance invalid; those in
/// [-kPsdTolerance, 0) are rounding dust and get clamped to zero.
inline constexpr double kPsdTolerance = 1e-10;

/// Relative singular value threshold for numerical rank decisions.
inline constexpr double kRankTolerance = 1e-9;

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline double min_eigenvalue(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Symmetrizes and clamps eigenvalue dust; throws NotPositiveSemidefinite
/// when an eigenvalue is below -kPsdTolerance.
inline Matrix repair_psd(const Matrix& m) {
  Matrix s = symmetrize(m);
  if (s.size() == 0) return s;
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  const Vector& ev = es.eigenvalues();
  if (ev.minCoeff() < -kPsdTolerance) {
    fail(ErrorKind::kNotPositiveSemidefinite,
         "covariance has eigenvalue " + std::to_string(ev.minCoeff()));
  }
  if (ev.minCoeff() >= 0.0) return s;
  const Vector clamped = ev.cwiseMax(0.0);
  return symmetrize(es.eigenvectors() * clamped.asDiagonal() *
                    es.eigenvectors().transpose());
}

inline double spectral_radius(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline std::size_t numerical_rank(const Matrix& m, double rel_tol = kRankTolerance) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cutoff = rel_tol * sv(0);
  return static_cast<std::size_t>((sv.array() > cutoff).count());
}

inline Matrix observability_matrix(const Matrix& a, const Matrix& c) {
  const Eigen::Index m = a.rows();
  Matrix obs(c.rows() * m, m);
  Matrix block = c;
  for (Eigen::Index k = 0; k < m; ++k) {
    obs.middleRows(k * c.rows(), c.rows()) = block;
    block = block * a;
  }
  return obs;
}

inline Matrix controllability_matrix(const Matrix& a, const Matrix& b) {
  const Eigen::Index m = a.rows();
  Matrix ctrb(m, b.cols() * m);
  Matrix block = b;
  for (Eigen::Index k = 0; k < m; ++k) {
    ctrb.middleCols(k * b.cols(), b.cols()) = block;
    block = a * block;
  }
  return ctrb;
}

}  // namespace infotrans
