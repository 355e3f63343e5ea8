#pragma once

/// \file klmetrics.hpp
/// Gaussian KL divergence, the n-step KL rate metric between a truth model
/// and a frozen approximation, its asymptotic value, the closed forms for the
/// decoupled two-state system, and crossing-time analysis of two competing
/// reductions.

#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "infotrans/covprop.hpp"
#include "infotrans/linmodel.hpp"

namespace infotrans {

struct GaussianOutputBelief {
  Vector mean;
  Matrix cov;
};

namespace detail {

struct CholeskyFactor {
  Matrix lower;
  double log_det = 0.0;
};

inline CholeskyFactor factor_pd(const Matrix& cov, ErrorKind on_failure) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14)) {
    fail(on_failure, "covariance is not positive definite");
  }
  CholeskyFactor f;
  f.lower = llt.matrixL();
  f.log_det = 2.0 * f.lower.diagonal().array().log().sum();
  return f;
}

/// KL(N(0, s_p) || N(0, s_q)) + 0.5 tr(s_q^{-1} second_moment), where
/// second_moment is E[(mu_p - mu_q)(mu_p - mu_q)^T].
inline double expected_gaussian_kl(const Matrix& s_p, const Matrix& s_q,
                                   const Matrix& second_moment, ErrorKind on_failure) {
  if (s_p.rows() != s_q.rows() || second_moment.rows() != s_q.rows()) {
    fail(ErrorKind::kDimensionMismatch, "gaussian_kl: dimensions differ");
  }
  const CholeskyFactor fp = factor_pd(s_p, on_failure);
  const CholeskyFactor fq = factor_pd(s_q, on_failure);
  if (s_p == s_q && second_moment.isZero(0.0)) return 0.0;

  const auto lq = fq.lower.triangularView<Eigen::Lower>();
  const Matrix whitened = lq.solve(fp.lower);
  const Matrix moment_left = lq.solve(second_moment);
  const Matrix moment = lq.solve(moment_left.transpose());
  const double k = static_cast<double>(s_q.rows());
  const double kl = 0.5 * (whitened.squaredNorm() + moment.trace() - k +
                           fq.log_det - fp.log_det);
  return std::max(0.0, kl);
}

}  // namespace detail

/// KL(p || q) for multivariate Gaussians.
inline double gaussian_kl(const GaussianOutputBelief& p, const GaussianOutputBelief& q) {
  if (p.mean.size() != q.mean.size() || p.cov.rows() != p.mean.size() ||
      q.cov.rows() != q.mean.size() || p.cov.cols() != p.cov.rows() ||
      q.cov.cols() != q.cov.rows()) {
    fail(ErrorKind::kDimensionMismatch, "gaussian_kl: dimensions differ");
  }
  const Vector diff = p.mean - q.mean;
  return detail::expected_gaussian_kl(p.cov, q.cov, diff * diff.transpose(),
                                      ErrorKind::kSingularCovariance);
}

/// Nonnegative sequence Delta H_0 .. Delta H_n.
class KlTrajectory {
 public:
  KlTrajectory() = default;

  explicit KlTrajectory(std::vector<double> values) : values_(std::move(values)) {
    for (double& v : values_) {
      if (!std::isfinite(v) || v < -1e-12) {
        fail(ErrorKind::kInvalidArgument,
             "KL trajectory entries must be finite and nonnegative");
      }
      v = std::max(v, 0.0);
    }
  }

  std::size_t horizon() const { return values_.empty() ? 0 : values_.size() - 1; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t n) const { return values_[n]; }
  double back() const { return values_.back(); }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
};

enum class KlMode {
  /// Truth and approximate Kalman filters driven by truth outputs; the
  /// expectation over output histories is evaluated analytically.
  kFilter,
  /// Past outputs pin down the previous state, so both predictive densities
  /// share the variance sigma^2 (C B B^T C^T + D D^T) and differ only in
  /// their means C A0 x and C A1 x.
  kExactObservation,
};

/// Which state covariance the n-th closed-form value uses.
enum class IndexConvention {
  kCurrent,  ///< Sigma_n
  kLagged,   ///< Sigma_{n-1} (Sigma_0 at n = 0)
};

inline std::size_t covariance_index(std::size_t n, IndexConvention indexing) {
  return indexing == IndexConvention::kLagged && n > 0 ? n - 1 : n;
}

struct KlOptions {
  KlMode mode = KlMode::kFilter;
  FilterOptions filter{};
  IndexConvention indexing = IndexConvention::kCurrent;
  SteadyStateOptions steady{};
};

// ---------------------------------------------------------------------------
// Decoupled two-state system
// ---------------------------------------------------------------------------

enum class FrozenState { kFirst, kSecond };

/// Parameters of x' = diag(a11, a22) x + [1 1]^T d, y = [c1 c2] x.
struct DecoupledParams {
  double a11 = 0.0;
  double a22 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double sigma = 1.0;
  double sigma0_11 = 1.0;
  double sigma0_22 = 1.0;

  void validate() const {
    if (!(std::abs(a11) < 1.0) || !(std::abs(a22) < 1.0)) {
      fail(ErrorKind::kInvalidArgument, "decoupled parameters need |A11|, |A22| < 1");
    }
    if (!(sigma > 0.0)) fail(ErrorKind::kInvalidArgument, "sigma must be positive");
    if (!(sigma0_11 >= 0.0) || !(sigma0_22 >= 0.0)) {
      fail(ErrorKind::kInvalidArgument, "initial variances must be nonnegative");
    }
    if (c1 + c2 == 0.0) {
      fail(ErrorKind::kDegenerateOutput, "C1 + C2 = 0 makes the output degenerate");
    }
  }

  /// Extracts the parameters from a model of exactly the decoupled form.
  static DecoupledParams from_model(const LinearGaussianModel& model) {
    const Matrix& a = model.A();
    const bool shape_ok = model.state_dim() == 2 && model.noise_dim() == 1 &&
                          model.output_dim() == 1;
    if (!shape_ok || a(0, 1) != 0.0 || a(1, 0) != 0.0 || model.B()(0, 0) != 1.0 ||
        model.B()(1, 0) != 1.0 || !model.D().isZero(0.0) ||
        model.sigma0()(0, 1) != 0.0) {
      fail(ErrorKind::kInvalidArgument,
           "model is not a decoupled two-state system with B = [1 1]^T and D = 0");
    }
    DecoupledParams p{a(0, 0),        a(1, 1),        model.C()(0, 0),
                      model.C()(0, 1), model.sigma(), model.sigma0()(0, 0),
                      model.sigma0()(1, 1)};
    p.validate();
    return p;
  }

  double a_of(FrozenState s) const { return s == FrozenState::kFirst ? a11 : a22; }
  double c_of(FrozenState s) const { return s == FrozenState::kFirst ? c1 : c2; }
  double sigma0_of(FrozenState s) const {
    return s == FrozenState::kFirst ? sigma0_11 : sigma0_22;
  }

  /// Delta H = gain * Sigma^{ii}.
  double kl_gain(FrozenState s) const {
    const double c = c_of(s);
    const double lag = 1.0 - a_of(s);
    const double sum = c1 + c2;
    return c * c * lag * lag / (2.0 * sum * sum * sigma * sigma);
  }

  double steady_variance(FrozenState s) const {
    const double a = a_of(s);
    return sigma * sigma / (1.0 - a * a);
  }
};

/// Delta H_n from the scalar recursion Sigma' = a^2 Sigma + sigma^2.
inline KlTrajectory nstep_kl_decoupled(const DecoupledParams& params, FrozenState frozen,
                                       std::size_t n,
                                       IndexConvention indexing = IndexConvention::kCurrent) {
  params.validate();
  const double a2 = params.a_of(frozen) * params.a_of(frozen);
  const double s2 = params.sigma * params.sigma;
  const double gain = params.kl_gain(frozen);
  std::vector<double> variances(n + 1);
  variances[0] = params.sigma0_of(frozen);
  for (std::size_t t = 1; t <= n; ++t) variances[t] = a2 * variances[t - 1] + s2;
  std::vector<double> values(n + 1);
  for (std::size_t t = 0; t <= n; ++t) {
    values[t] = gain * variances[covariance_index(t, indexing)];
  }
  return KlTrajectory(std::move(values));
}

inline double decoupled_asymptote(const DecoupledParams& params, FrozenState frozen) {
  params.validate();
  return params.kl_gain(frozen) * params.steady_variance(frozen);
}

/// Delta H_n = a^{2n} Delta H_0 + (1 - a^{2n}) Delta H_inf.
inline double nstep_kl_closed_form(const DecoupledParams& params, FrozenState frozen,
                                   std::size_t n,
                                   IndexConvention indexing = IndexConvention::kCurrent) {
  params.validate();
  const double h0 = params.kl_gain(frozen) * params.sigma0_of(frozen);
  const double h_inf = decoupled_asymptote(params, frozen);
  const double decay =
      std::pow(params.a_of(frozen), 2.0 * static_cast<double>(covariance_index(n, indexing)));
  return decay * h0 + (1.0 - decay) * h_inf;
}

// ---------------------------------------------------------------------------
// General models
// ---------------------------------------------------------------------------

namespace detail {

inline void check_comparable(const LinearGaussianModel& truth, const FrozenModel& approx) {
  const LinearGaussianModel& m = approx.as_model();
  if (truth.state_dim() != m.state_dim() || truth.output_dim() != m.output_dim() ||
      truth.noise_dim() != m.noise_dim()) {
    fail(ErrorKind::kDimensionMismatch, "truth and approximation dimensions differ");
  }
}

/// sigma^2 (C B B^T C^T + D D^T), the one-step output variance given x_{n-1}.
inline Matrix exact_observation_variance(const LinearGaussianModel& truth) {
  const Matrix cb = truth.C() * truth.B();
  const double s2 = truth.sigma() * truth.sigma();
  return symmetrize(s2 * (cb * cb.transpose() + truth.D() * truth.D().transpose()));
}

inline double exact_observation_kl(const Matrix& variance, const Matrix& mean_map,
                                   const Matrix& state_cov) {
  const Matrix moment = symmetrize(mean_map * state_cov * mean_map.transpose());
  return expected_gaussian_kl(variance, variance, moment, ErrorKind::kSingularInnovation);
}

inline double filter_kl(const CoupledFilters::Snapshot& s) {
  const Vector& mu = s.discrepancy.mean;
  const Matrix moment = s.discrepancy.cov + mu * mu.transpose();
  return expected_gaussian_kl(s.truth_innovation, s.approx_innovation, moment,
                              ErrorKind::kSingularInnovation);
}

}  // namespace detail

/// n-step KL rate metric Delta H_0 .. Delta H_n between `truth` and `approx`.
inline KlTrajectory nstep_kl_general(const LinearGaussianModel& truth,
                                     const FrozenModel& approx, std::size_t n,
                                     const KlOptions& opts = {}) {
  require_schur_stable(truth);
  detail::check_comparable(truth, approx);
  std::vector<double> values;
  values.reserve(n + 1);

  if (opts.mode == KlMode::kExactObservation) {
    const Matrix variance = detail::exact_observation_variance(truth);
    const Matrix mean_map = truth.C() * (approx.transition() - truth.A());
    const CovTrajectory covs =
        lyapunov_trajectory(truth.sigma0(), truth.A(), truth.B(), truth.sigma(), n);
    for (std::size_t t = 0; t <= n; ++t) {
      values.push_back(detail::exact_observation_kl(
          variance, mean_map, covs[covariance_index(t, opts.indexing)]));
    }
    return KlTrajectory(std::move(values));
  }

  CoupledFilters filters(truth, approx.as_model(), opts.filter);
  for (std::size_t t = 0; t <= n; ++t) {
    values.push_back(detail::filter_kl(filters.snapshot()));
    if (t < n) filters.advance();
  }
  return KlTrajectory(std::move(values));
}

namespace detail {

/// Runs the coupled filters until successive values differ by less than the
/// steady-state tolerance.
inline double tail_kl_rate(const LinearGaussianModel& truth, const FrozenModel& approx,
                           const KlOptions& opts) {
  CoupledFilters filters(truth, approx.as_model(), opts.filter);
  double previous = filter_kl(filters.snapshot());
  for (std::size_t k = 0; k < opts.steady.max_iterations; ++k) {
    filters.advance();
    const double current = filter_kl(filters.snapshot());
    if (std::abs(current - previous) < opts.steady.tolerance) return current;
    previous = current;
  }
  fail(ErrorKind::kNoConvergence, "KL rate did not settle within the iteration cap");
}

}  // namespace detail

/// Limit of `nstep_kl_general` as n -> infinity.
inline double asymptotic_kl_rate(const LinearGaussianModel& truth, const FrozenModel& approx,
                                 const KlOptions& opts = {}) {
  require_schur_stable(truth);
  detail::check_comparable(truth, approx);

  if (opts.mode == KlMode::kExactObservation) {
    const Matrix steady = lyapunov_steady(truth.A(), truth.B(), truth.sigma(), opts.steady);
    return detail::exact_observation_kl(detail::exact_observation_variance(truth),
                                        truth.C() * (approx.transition() - truth.A()),
                                        steady);
  }

  const LinearGaussianModel& model = approx.as_model();
  std::optional<RiccatiSolution> truth_steady;
  std::optional<RiccatiSolution> approx_steady;
  // Frozen states that the output cannot separate make the approximate
  // Riccati recursion grow without bound; a short budget detects that and the
  // tail iteration gives the same limit for slowly converging cases.
  SteadyStateOptions riccati_opts = opts.steady;
  riccati_opts.max_iterations = std::min<std::size_t>(opts.steady.max_iterations, 20000);
  try {
    truth_steady = riccati_steady(truth, opts.filter, riccati_opts);
    approx_steady = riccati_steady(model, opts.filter, riccati_opts);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kNoConvergence) throw;
    return detail::tail_kl_rate(truth, approx, opts);
  }

  // Steady coupled recursion with constant gains; the stacked mean decays to
  // zero whenever the closed loop is Schur.
  const auto m = static_cast<Eigen::Index>(truth.state_dim());
  const Matrix& c = truth.C();
  const Matrix& l = truth_steady->gain;
  const Matrix gain_gap = l - approx_steady->gain;
  Matrix f = Matrix::Zero(3 * m, 3 * m);
  f.block(0, 0, m, m) = truth.A();
  f.block(m, 0, m, m) = l * c;
  f.block(m, m, m, m) = truth.A() - l * c;
  f.block(2 * m, 0, m, m) = gain_gap * c;
  f.block(2 * m, m, m, m) = (truth.A() - model.A()) - gain_gap * c;
  f.block(2 * m, 2 * m, m, m) = model.A() - approx_steady->gain * c;
  if (!(spectral_radius(f) < 1.0)) return detail::tail_kl_rate(truth, approx, opts);

  Matrix g(3 * m, truth.B().cols());
  g.middleRows(0, m) = truth.B();
  g.middleRows(m, m) = l * truth.D();
  g.middleRows(2 * m, m) = gain_gap * truth.D();
  const Matrix joint = lyapunov_steady(f, g, truth.sigma(), opts.steady);

  const Matrix moment = symmetrize(c * joint.block(2 * m, 2 * m, m, m) * c.transpose());
  const Matrix s_truth =
      symmetrize(c * truth_steady->P * c.transpose() + innovation_noise(truth, opts.filter));
  const Matrix s_approx = symmetrize(c * approx_steady->P * c.transpose() +
                                     innovation_noise(model, opts.filter));
  return detail::expected_gaussian_kl(s_truth, s_approx, moment,
                                      ErrorKind::kSingularInnovation);
}

// ---------------------------------------------------------------------------
// Crossing analysis
// ---------------------------------------------------------------------------

struct CrossingAsymptotes {
  double alpha_inf = 0.0;
  double beta_inf = 0.0;
  /// Decay factor of the alpha trajectory (A11); the bounds need it in (0, 1).
  double a11 = 0.0;
};

struct CrossingResult {
  /// First index whose sign of (alpha - beta) differs from the initial sign.
  std::optional<std::size_t> crossing_step;
  /// Real-valued root of alpha(t) = beta(t) from the closed forms, when known.
  std::optional<double> crossing_time;
  double alpha0 = 0.0;
  double beta0 = 0.0;
  double alpha_inf = 0.0;
  double beta_inf = 0.0;
  std::optional<double> lower_bound;
  std::optional<double> upper_bound;
  /// alpha0 < beta0 < beta_inf < alpha_inf
  bool assumption1_holds = false;

  bool has_crossing() const { return crossing_step.has_value(); }

  std::pair<double, double> require_bounds() const {
    if (!lower_bound || !upper_bound) {
      fail(ErrorKind::kBoundsUndefined,
           "crossing bounds need 0 < A11 < 1, alpha_inf > beta_0 and alpha_inf > beta_inf");
    }
    return {*lower_bound, *upper_bound};
  }

  /// The true crossing time lies in (k - 1, k] for k = crossing_step, so the
  /// analytic interval lower < nbar + 1 < upper must meet (k, k + 1]:
  /// lower < k + 1 and k < upper.
  bool bounds_consistent() const {
    if (!crossing_step || !lower_bound || !upper_bound) return false;
    const auto k = static_cast<double>(*crossing_step);
    return *lower_bound < k + 1.0 && k < *upper_bound;
  }
};

namespace detail {

inline int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace detail

inline CrossingResult crossing_analysis(const KlTrajectory& alpha, const KlTrajectory& beta,
                                        const CrossingAsymptotes& asymptotes) {
  if (alpha.size() != beta.size() || alpha.size() == 0) {
    fail(ErrorKind::kLengthMismatch, "crossing_analysis needs equal, nonempty horizons");
  }
  CrossingResult r;
  r.alpha0 = alpha[0];
  r.beta0 = beta[0];
  r.alpha_inf = asymptotes.alpha_inf;
  r.beta_inf = asymptotes.beta_inf;
  r.assumption1_holds =
      r.alpha0 < r.beta0 && r.beta0 < r.beta_inf && r.beta_inf < r.alpha_inf;

  int reference = 0;
  for (std::size_t n = 0; n < alpha.size(); ++n) {
    const int s = detail::sign_of(alpha[n] - beta[n]);
    if (reference == 0) {
      reference = s;
      continue;
    }
    if (s != reference) {
      r.crossing_step = n;
      break;
    }
  }

  const double a = asymptotes.a11;
  const double head = r.alpha_inf - r.beta0;
  const double tail = r.alpha_inf - r.beta_inf;
  if (a > 0.0 && a < 1.0 && r.alpha_inf > 0.0 && head > 0.0 && tail > 0.0) {
    const double denom = 2.0 * std::log(a);
    r.lower_bound = (std::log(head) - std::log(r.alpha_inf)) / denom;
    r.upper_bound = (std::log(tail) - std::log(r.alpha_inf)) / denom;
  }
  return r;
}

/// Crossing analysis of the two single-state freezes of a decoupled system,
/// with closed-form asymptotes and the real-valued crossing time.
inline CrossingResult crossing_analysis(const KlTrajectory& alpha, const KlTrajectory& beta,
                                        const DecoupledParams& params,
                                        IndexConvention indexing = IndexConvention::kCurrent) {
  CrossingResult r = crossing_analysis(
      alpha, beta,
      CrossingAsymptotes{decoupled_asymptote(params, FrozenState::kFirst),
                         decoupled_asymptote(params, FrozenState::kSecond), params.a11});
  if (!r.crossing_step || *r.crossing_step == 0) return r;

  auto value = [&](FrozenState s, double t) {
    if (indexing == IndexConvention::kLagged) t = std::max(0.0, t - 1.0);
    const double h0 = params.kl_gain(s) * params.sigma0_of(s);
    const double h_inf = decoupled_asymptote(params, s);
    const double decay = std::pow(params.a_of(s), 2.0 * t);
    return decay * h0 + (1.0 - decay) * h_inf;
  };
  auto gap = [&](double t) {
    return value(FrozenState::kFirst, t) - value(FrozenState::kSecond, t);
  };
  double lo = static_cast<double>(*r.crossing_step - 1);
  double hi = static_cast<double>(*r.crossing_step);
  const int start_sign = detail::sign_of(gap(lo));
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (detail::sign_of(gap(mid)) == start_sign) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  r.crossing_time = hi;
  return r;
}

}  // namespace infotrans
