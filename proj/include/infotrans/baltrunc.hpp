#pragma once

/// \file baltrunc.hpp
/// Asymptotic baseline: controllability/observability gramians, Hankel
/// singular values, square-root balancing and state truncation.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "infotrans/covprop.hpp"
#include "infotrans/linmodel.hpp"

namespace infotrans {

enum class GramianForm {
  /// A P A^T + B B^T = P,  A^T Q A + C^T C = Q
  kDiscrete,
  /// A P + P A^T = -B B^T,  A^T Q + Q A = -C^T C
  kContinuous,
};

struct GramianPair {
  Matrix P;
  Matrix Q;
  double controllability_residual = 0.0;
  double observability_residual = 0.0;
};

namespace detail {

/// Solves A X + X A^T = -W through the Kronecker form; needs A Hurwitz.
inline Matrix continuous_lyapunov(const Matrix& a, const Matrix& w) {
  Eigen::EigenSolver<Matrix> es(a, false);
  if (!(es.eigenvalues().real().maxCoeff() < 0.0)) {
    fail(ErrorKind::kUnstable, "continuous gramians need a Hurwitz matrix");
  }
  const Eigen::Index m = a.rows();
  const Matrix eye = Matrix::Identity(m, m);
  Matrix kron(m * m, m * m);
  // vec(A X + X A^T) = (I (x) A + A (x) I) vec(X), column-major vec.
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      kron.block(i * m, j * m, m, m) = eye(i, j) * a + a(i, j) * eye;
    }
  }
  const Vector rhs = -Eigen::Map<const Vector>(w.data(), m * m);
  const Vector sol = kron.partialPivLu().solve(rhs);
  return symmetrize(Eigen::Map<const Matrix>(sol.data(), m, m));
}

}  // namespace detail

inline GramianPair gramians(const LinearGaussianModel& model,
                            GramianForm form = GramianForm::kDiscrete,
                            const SteadyStateOptions& opts = {}) {
  const Matrix& a = model.A();
  const Matrix bb = model.B() * model.B().transpose();
  const Matrix cc = model.C().transpose() * model.C();
  GramianPair g;
  if (form == GramianForm::kDiscrete) {
    require_schur_stable(model);
    g.P = lyapunov_steady(a, model.B(), 1.0, opts);
    g.Q = lyapunov_steady(a.transpose(), model.C().transpose(), 1.0, opts);
    g.controllability_residual = detail::max_abs(a * g.P * a.transpose() + bb - g.P);
    g.observability_residual = detail::max_abs(a.transpose() * g.Q * a + cc - g.Q);
  } else {
    g.P = repair_psd(detail::continuous_lyapunov(a, bb));
    g.Q = repair_psd(detail::continuous_lyapunov(a.transpose(), cc));
    g.controllability_residual = detail::max_abs(a * g.P + g.P * a.transpose() + bb);
    g.observability_residual = detail::max_abs(a.transpose() * g.Q + g.Q * a + cc);
  }
  return g;
}

/// Nonincreasing, nonnegative Hankel singular values.
class HankelSpectrum {
 public:
  HankelSpectrum() = default;

  explicit HankelSpectrum(std::vector<double> values) : values_(std::move(values)) {
    for (double& v : values_) v = std::max(v, 0.0);
    std::sort(values_.begin(), values_.end(), std::greater<>());
  }

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

/// Square roots of the eigenvalues of P Q, computed from the symmetric
/// product P^{1/2} Q P^{1/2}.
inline HankelSpectrum hankel_singular_values(const GramianPair& g) {
  if (g.P.rows() != g.Q.rows() || g.P.rows() != g.P.cols() || g.Q.rows() != g.Q.cols()) {
    fail(ErrorKind::kDimensionMismatch, "gramians must be square and of equal size");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> ep(symmetrize(g.P));
  const Vector root = ep.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix p_half = ep.eigenvectors() * root.asDiagonal() * ep.eigenvectors().transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> ec(symmetrize(p_half * g.Q * p_half),
                                           Eigen::EigenvaluesOnly);
  std::vector<double> values;
  for (Eigen::Index i = 0; i < ec.eigenvalues().size(); ++i) {
    values.push_back(std::sqrt(std::max(ec.eigenvalues()(i), 0.0)));
  }
  return HankelSpectrum(std::move(values));
}

struct BalancedModel {
  LinearGaussianModel model;
  /// x_balanced = transform * x.
  Matrix transform;
  Matrix inverse_transform;
  HankelSpectrum spectrum;
};

/// Square-root balancing: P = Lp Lp^T, Q = Lq Lq^T, Lq^T Lp = U S V^T,
/// T = S^{-1/2} U^T Lq^T. Rows of T are signed so that their largest entry is
/// positive, which makes an already balanced model map to itself.
inline BalancedModel balance(const LinearGaussianModel& model) {
  const GramianPair g = gramians(model);
  Eigen::LLT<Matrix> lp(g.P);
  Eigen::LLT<Matrix> lq(g.Q);
  if (lp.info() != Eigen::Success || lq.info() != Eigen::Success ||
      !(lp.rcond() > 1e-14) || !(lq.rcond() > 1e-14)) {
    fail(ErrorKind::kSingularGramian, "balancing needs positive definite gramians");
  }
  const Matrix lower_p = lp.matrixL();
  const Matrix lower_q = lq.matrixL();
  Eigen::JacobiSVD<Matrix> svd(lower_q.transpose() * lower_p,
                               Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  if (!(s.minCoeff() > 1e-14 * s.maxCoeff())) {
    fail(ErrorKind::kSingularGramian, "Hankel singular values vanish");
  }
  const Vector s_inv_half = s.cwiseSqrt().cwiseInverse();
  Matrix t = s_inv_half.asDiagonal() * svd.matrixU().transpose() * lower_q.transpose();
  Matrix t_inv = lower_p * svd.matrixV() * s_inv_half.asDiagonal();
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    Eigen::Index j = 0;
    t.row(i).cwiseAbs().maxCoeff(&j);
    if (t(i, j) < 0.0) {
      t.row(i) *= -1.0;
      t_inv.col(i) *= -1.0;
    }
  }

  LinearGaussianModel balanced(t * model.A() * t_inv, t * model.B(), model.C() * t_inv,
                               model.D(), model.sigma(), t * model.x0(),
                               repair_psd(t * model.sigma0() * t.transpose()),
                               model.name().empty() ? "balanced" : model.name() + " balanced");
  std::vector<double> hsv(s.data(), s.data() + s.size());
  return {std::move(balanced), std::move(t), std::move(t_inv), HankelSpectrum(std::move(hsv))};
}

/// Removes the states not in `keep` (hard truncation, not freezing). Noise
/// scale and D are unchanged.
inline LinearGaussianModel truncate(const LinearGaussianModel& model, const StateSubset& keep) {
  keep.check_against(model.state_dim());
  if (keep.empty()) fail(ErrorKind::kInvalidSubset, "truncation must keep at least one state");
  using detail::select_block;
  return LinearGaussianModel(select_block(model.A(), keep, keep),
                             detail::select_rows(model.B(), keep),
                             detail::select_cols(model.C(), keep), model.D(), model.sigma(),
                             detail::select_entries(model.x0(), keep),
                             select_block(model.sigma0(), keep, keep),
                             model.name().empty() ? "" : model.name() + " truncated");
}

}  // namespace infotrans
