#pragma once

/// \file covprop.hpp
/// Covariance propagation: open-loop Lyapunov recursion, the Kalman a-priori
/// covariance recursion, their steady states, and the joint moments of the
/// truth-filter / approximate-filter output discrepancy.

#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>

#include "infotrans/linalg.hpp"
#include "infotrans/linmodel.hpp"

namespace infotrans {

struct SteadyStateOptions {
  /// Max-abs fixed-point defect, scaled by max(1, max-abs of the solution).
  double tolerance = 1e-12;
  std::size_t max_iterations = 1'000'000;
};

namespace detail {

inline double scaled_tolerance(const SteadyStateOptions& opts, const Matrix& x) {
  return opts.tolerance * std::max(1.0, max_abs(x));
}

}  // namespace detail

/// Sequence of covariance matrices; every stored entry is symmetrized and
/// checked positive semidefinite.
class CovTrajectory {
 public:
  void push_back(const Matrix& cov) { matrices_.push_back(repair_psd(cov)); }

  const Matrix& operator[](std::size_t t) const { return matrices_[t]; }
  const Matrix& back() const { return matrices_.back(); }
  std::size_t size() const { return matrices_.size(); }
  auto begin() const { return matrices_.begin(); }
  auto end() const { return matrices_.end(); }

 private:
  std::vector<Matrix> matrices_;
};

/// Sigma' = A Sigma A^T + sigma^2 B B^T.
inline Matrix lyapunov_step(const Matrix& cov, const Matrix& a, const Matrix& b,
                            double sigma) {
  if (a.rows() != a.cols() || cov.rows() != a.rows() || cov.cols() != a.cols() ||
      b.rows() != a.rows()) {
    fail(ErrorKind::kDimensionMismatch, "lyapunov_step: incompatible shapes");
  }
  return symmetrize(a * cov * a.transpose() + sigma * sigma * b * b.transpose());
}

/// Sigma_0 .. Sigma_n of the open-loop recursion.
inline CovTrajectory lyapunov_trajectory(const Matrix& cov0, const Matrix& a,
                                         const Matrix& b, double sigma,
                                         std::size_t n) {
  CovTrajectory traj;
  Matrix cov = cov0;
  traj.push_back(cov);
  for (std::size_t t = 0; t < n; ++t) {
    cov = lyapunov_step(cov, a, b, sigma);
    traj.push_back(cov);
  }
  return traj;
}

/// Fixed point of `lyapunov_step`, by squared-power doubling
/// X <- X + A_k X A_k^T, A_k <- A_k^2.
inline Matrix lyapunov_steady(const Matrix& a, const Matrix& b, double sigma,
                              const SteadyStateOptions& opts = {}) {
  if (a.rows() != a.cols() || b.rows() != a.rows()) {
    fail(ErrorKind::kDimensionMismatch, "lyapunov_steady: incompatible shapes");
  }
  const double rho = spectral_radius(a);
  if (!(rho < 1.0)) {
    fail(ErrorKind::kUnstable,
         "lyapunov_steady: spectral radius " + std::to_string(rho) + " >= 1");
  }
  const Matrix forcing = sigma * sigma * b * b.transpose();
  Matrix x = forcing;
  Matrix power = a;
  const std::size_t cap = std::min<std::size_t>(opts.max_iterations, 256);
  bool settled = false;
  for (std::size_t k = 0; k < cap; ++k) {
    const Matrix increment = power * x * power.transpose();
    x = symmetrize(x + increment);
    power = power * power;
    if (detail::max_abs(increment) <=
            std::numeric_limits<double>::epsilon() * detail::max_abs(x) ||
        detail::max_abs(power) == 0.0) {
      settled = true;
      break;
    }
  }
  const double residual =
      detail::max_abs(a * x * a.transpose() + forcing - x);
  if (!settled || residual > detail::scaled_tolerance(opts, x)) {
    fail(ErrorKind::kNoConvergence,
         "lyapunov_steady: residual " + std::to_string(residual));
  }
  return repair_psd(x);
}

enum class InnovationNoise {
  /// R = sigma^2 D D^T, the noise in y = C x + D d.
  kOutputNoise,
  /// R = sigma^2 (C B)(C B)^T; reduces to the printed B B^T for scalar models.
  kPaperBbt,
};

struct FilterOptions {
  InnovationNoise innovation = InnovationNoise::kOutputNoise;
  /// Use the exact filter for the shared noise d_t in state and output
  /// (cross covariance sigma^2 B D^T). Off by default.
  bool correlated_noise = false;
};

inline Matrix innovation_noise(const LinearGaussianModel& model,
                               const FilterOptions& opts = {}) {
  const double s2 = model.sigma() * model.sigma();
  switch (opts.innovation) {
    case InnovationNoise::kPaperBbt: {
      const Matrix cb = model.C() * model.B();
      return s2 * cb * cb.transpose();
    }
    case InnovationNoise::kOutputNoise:
    default:
      return s2 * model.D() * model.D().transpose();
  }
}

struct KalmanCovStep {
  Matrix P_next;
  /// One-step predictor gain L: x_{t+1} = A x_t + L (y_t - C x_t).
  Matrix gain;
  /// Innovation covariance C P C^T + R at the input step.
  Matrix innovation_cov;
};

namespace detail {

/// Solves X S = N for X with S symmetric positive definite.
inline Matrix right_solve_spd(const Matrix& numerator, const Matrix& s) {
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14)) {
    fail(ErrorKind::kSingularInnovation, "innovation covariance is singular");
  }
  return llt.solve(numerator.transpose()).transpose();
}

}  // namespace detail

/// A-priori covariance recursion
///   P' = A P A^T - L S L^T + sigma^2 B B^T,   S = C P C^T + R,
///   L = (A P C^T [+ sigma^2 B D^T]) S^{-1}.
/// A zero innovation covariance with a zero gain numerator (nothing is
/// measured) degenerates to the open-loop step.
inline KalmanCovStep kalman_cov_step(const Matrix& p, const LinearGaussianModel& model,
                                     const FilterOptions& opts = {}) {
  const Matrix& a = model.A();
  const Matrix& c = model.C();
  if (p.rows() != a.rows() || p.cols() != a.cols()) {
    fail(ErrorKind::kDimensionMismatch, "kalman_cov_step: P must be m x m");
  }
  const double s2 = model.sigma() * model.sigma();
  KalmanCovStep out;
  out.innovation_cov = symmetrize(c * p * c.transpose() + innovation_noise(model, opts));
  Matrix numerator = a * p * c.transpose();
  if (opts.correlated_noise) numerator += s2 * model.B() * model.D().transpose();

  if (out.innovation_cov.isZero(0.0) && numerator.isZero(0.0)) {
    out.gain = Matrix::Zero(a.rows(), c.rows());
  } else {
    out.gain = detail::right_solve_spd(numerator, out.innovation_cov);
  }
  out.P_next = symmetrize(a * p * a.transpose() -
                          out.gain * out.innovation_cov * out.gain.transpose() +
                          s2 * model.B() * model.B().transpose());
  return out;
}

/// Kalman predictor state: a-priori mean, covariance and the gain used to
/// reach the next step.
struct FilterState {
  Vector prior_mean;
  Matrix prior_cov;
  Matrix gain;
};

inline FilterState initial_filter_state(const LinearGaussianModel& model) {
  return {model.x0(), model.sigma0(),
          Matrix::Zero(model.A().rows(), model.C().rows())};
}

/// Consumes the measurement y_t and returns the prior for t + 1.
inline FilterState kalman_predict(const FilterState& state, const Vector& y,
                                  const LinearGaussianModel& model,
                                  const FilterOptions& opts = {}) {
  if (static_cast<std::size_t>(y.size()) != model.output_dim()) {
    fail(ErrorKind::kDimensionMismatch, "kalman_predict: output dimension");
  }
  const KalmanCovStep step = kalman_cov_step(state.prior_cov, model, opts);
  FilterState next;
  next.prior_mean = model.A() * state.prior_mean +
                    step.gain * (y - model.C() * state.prior_mean);
  next.prior_cov = repair_psd(step.P_next);
  next.gain = step.gain;
  return next;
}

struct RiccatiSolution {
  Matrix P;
  double residual = 0.0;
  std::size_t iterations = 0;
  Matrix gain;
};

/// Steady state of `kalman_cov_step` by fixed-point iteration from Sigma0.
inline RiccatiSolution riccati_steady(const LinearGaussianModel& model,
                                      const FilterOptions& filter = {},
                                      const SteadyStateOptions& opts = {}) {
  Matrix p = repair_psd(model.sigma0());
  for (std::size_t k = 1; k <= opts.max_iterations; ++k) {
    const Matrix next = kalman_cov_step(p, model, filter).P_next;
    const double change = detail::max_abs(next - p);
    p = next;
    if (change <= detail::scaled_tolerance(opts, p)) {
      RiccatiSolution sol;
      sol.P = repair_psd(p);
      const KalmanCovStep check = kalman_cov_step(sol.P, model, filter);
      sol.residual = detail::max_abs(check.P_next - sol.P);
      sol.gain = check.gain;
      sol.iterations = k;
      return sol;
    }
  }
  fail(ErrorKind::kNoConvergence,
       "riccati_steady: no fixed point within " + std::to_string(opts.max_iterations) +
           " iterations");
}

/// Moments of the predicted-output discrepancy yhat_t - zhat_t.
struct DiscrepancyMoments {
  Vector mean;
  Matrix cov;
};

/// Truth filter and approximate filter driven by the same truth outputs.
///
/// Propagates the exact mean and covariance of the stacked vector
/// (x_t, xhat_t, xhat_t - what_t), where x is the true state, xhat the truth
/// filter prior mean and what the approximate filter prior mean:
///
///   x'     = A0 x + B d
///   xhat'  = L C x + (A0 - L C) xhat + L D d
///   delta' = (L - L') C x + (A0 - A1 - (L - L') C) xhat + (A1 - L' C) delta
///            + (L - L') D d
///
/// Identical models therefore keep delta exactly zero.
class CoupledFilters {
 public:
  struct Snapshot {
    std::size_t step = 0;
    Matrix truth_innovation;
    Matrix approx_innovation;
    DiscrepancyMoments discrepancy;
  };

  CoupledFilters(LinearGaussianModel truth, LinearGaussianModel approx,
                 FilterOptions opts = {})
      : truth_(std::move(truth)), approx_(std::move(approx)), opts_(opts) {
    if (truth_.state_dim() != approx_.state_dim() ||
        truth_.output_dim() != approx_.output_dim() ||
        truth_.noise_dim() != approx_.noise_dim()) {
      fail(ErrorKind::kDimensionMismatch, "truth and approximation dimensions differ");
    }
    if (truth_.C() != approx_.C() || truth_.D() != approx_.D()) {
      fail(ErrorKind::kDimensionMismatch,
           "truth and approximation must share the output map C and feedthrough D");
    }
    const auto m = static_cast<Eigen::Index>(truth_.state_dim());
    p_ = repair_psd(truth_.sigma0());
    q_ = repair_psd(approx_.sigma0());
    mean_ = Vector::Zero(3 * m);
    mean_.segment(0, m) = truth_.x0();
    mean_.segment(m, m) = truth_.x0();
    mean_.segment(2 * m, m) = truth_.x0() - approx_.x0();
    cov_ = Matrix::Zero(3 * m, 3 * m);
    cov_.topLeftCorner(m, m) = p_;
  }

  std::size_t step() const { return step_; }
  const Matrix& truth_cov() const { return p_; }
  const Matrix& approx_cov() const { return q_; }

  Snapshot snapshot() const {
    const auto m = static_cast<Eigen::Index>(truth_.state_dim());
    const Matrix& c = truth_.C();
    Snapshot s;
    s.step = step_;
    s.truth_innovation = symmetrize(c * p_ * c.transpose() + innovation_noise(truth_, opts_));
    s.approx_innovation =
        symmetrize(c * q_ * c.transpose() + innovation_noise(approx_, opts_));
    s.discrepancy.mean = c * mean_.segment(2 * m, m);
    s.discrepancy.cov = repair_psd(c * cov_.block(2 * m, 2 * m, m, m) * c.transpose());
    return s;
  }

  void advance() {
    const auto m = static_cast<Eigen::Index>(truth_.state_dim());
    const KalmanCovStep tk = kalman_cov_step(p_, truth_, opts_);
    const KalmanCovStep ak = kalman_cov_step(q_, approx_, opts_);
    const Matrix& a0 = truth_.A();
    const Matrix& a1 = approx_.A();
    const Matrix& c = truth_.C();
    const Matrix gain_gap = tk.gain - ak.gain;

    Matrix f = Matrix::Zero(3 * m, 3 * m);
    f.block(0, 0, m, m) = a0;
    f.block(m, 0, m, m) = tk.gain * c;
    f.block(m, m, m, m) = a0 - tk.gain * c;
    f.block(2 * m, 0, m, m) = gain_gap * c;
    f.block(2 * m, m, m, m) = (a0 - a1) - gain_gap * c;
    f.block(2 * m, 2 * m, m, m) = a1 - ak.gain * c;

    const auto p = static_cast<Eigen::Index>(truth_.noise_dim());
    Matrix g(3 * m, p);
    g.middleRows(0, m) = truth_.B();
    g.middleRows(m, m) = tk.gain * truth_.D();
    g.middleRows(2 * m, m) = gain_gap * truth_.D();

    const double s2 = truth_.sigma() * truth_.sigma();
    mean_ = f * mean_;
    cov_ = symmetrize(f * cov_ * f.transpose() + s2 * g * g.transpose());
    p_ = repair_psd(tk.P_next);
    q_ = repair_psd(ak.P_next);
    ++step_;
  }

 private:
  LinearGaussianModel truth_;
  LinearGaussianModel approx_;
  FilterOptions opts_;
  Matrix p_, q_;
  Vector mean_;
  Matrix cov_;
  std::size_t step_ = 0;
};

/// Mean and covariance of (yhat_t - zhat_t) for t = 0..n.
inline std::vector<DiscrepancyMoments> joint_discrepancy_moments(
    const LinearGaussianModel& truth, const FrozenModel& approx, std::size_t n,
    const FilterOptions& opts = {}) {
  CoupledFilters filters(truth, approx.as_model(), opts);
  std::vector<DiscrepancyMoments> out;
  out.reserve(n + 1);
  for (std::size_t t = 0; t <= n; ++t) {
    out.push_back(filters.snapshot().discrepancy);
    if (t < n) filters.advance();
  }
  return out;
}

/// Covariance of (yhat_t - zhat_t) for t = 0..n.
inline std::vector<Matrix> joint_discrepancy_cov(const LinearGaussianModel& truth,
                                                 const FrozenModel& approx,
                                                 std::size_t n,
                                                 const FilterOptions& opts = {}) {
  std::vector<Matrix> out;
  for (auto& moments : joint_discrepancy_moments(truth, approx, n, opts)) {
    out.push_back(std::move(moments.cov));
  }
  return out;
}

}  // namespace infotrans
