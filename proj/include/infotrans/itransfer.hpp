#pragma once

/// \file itransfer.hpp
/// Information transfer (IT): the n-step KL rate metric between a model and
/// the model with a state subset frozen, from states to the output and from
/// one state subset to another, plus ranking of reduction candidates.

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <span>
#include <thread>
#include <variant>
#include <vector>

#include "infotrans/klmetrics.hpp"
#include "infotrans/linmodel.hpp"

namespace infotrans {

struct OutputTarget {
  friend bool operator==(const OutputTarget&, const OutputTarget&) = default;
};

using TransferTarget = std::variant<OutputTarget, StateSubset>;

struct ItTrajectory {
  StateSubset source;
  TransferTarget target;
  KlTrajectory values;
};

/// IT from `subset` to the output over steps 0..n: the n-step KL rate metric
/// against the model with `subset` frozen (at x0 unless `frozen_value` is
/// given).
inline ItTrajectory it_state_to_output(const LinearGaussianModel& model,
                                       const StateSubset& subset, std::size_t n,
                                       const KlOptions& opts = {},
                                       std::optional<Vector> frozen_value = std::nullopt) {
  subset.check_against(model.state_dim());
  if (subset.size() == model.state_dim()) {
    fail(ErrorKind::kInvalidSubset, "cannot freeze every state");
  }
  const FrozenModel approx = freeze(model, subset, std::move(frozen_value));
  return {subset, OutputTarget{}, nstep_kl_general(model, approx, n, opts)};
}

inline double it_state_to_output_asymptotic(const LinearGaussianModel& model,
                                            const StateSubset& subset,
                                            const KlOptions& opts = {}) {
  subset.check_against(model.state_dim());
  if (subset.size() == model.state_dim()) {
    fail(ErrorKind::kInvalidSubset, "cannot freeze every state");
  }
  return asymptotic_kl_rate(model, freeze(model, subset), opts);
}

/// IT from `source` to `target` over steps 0..n.
///
/// Entry k is E[KL(p(b_{k+1} | x_0..x_k) || q(b_{k+1} | x_0..x_k))], where q
/// holds the source states at their initial values a_0. Both conditionals have
/// covariance sigma^2 B_b B_b^T and their means differ by A_ba (a_k - a_0), so
/// the entry is 0.5 tr(W^{-1} A_ba E[dd^T] A_ba^T) with d = a_k - a_0.
inline ItTrajectory it_state_to_state(const LinearGaussianModel& model,
                                      const StateSubset& source, const StateSubset& target,
                                      std::size_t n) {
  const std::size_t m = model.state_dim();
  source.check_against(m);
  target.check_against(m);
  if (source.empty() || target.empty() || !source.disjoint_with(target)) {
    fail(ErrorKind::kInvalidSubset, "source and target must be disjoint and nonempty");
  }
  const double s2 = model.sigma() * model.sigma();
  const Matrix b_target = detail::select_rows(model.B(), target);
  const Matrix target_noise = symmetrize(s2 * b_target * b_target.transpose());
  const detail::CholeskyFactor noise =
      detail::factor_pd(target_noise, ErrorKind::kSingularTargetNoise);
  const auto lower = noise.lower.triangularView<Eigen::Lower>();
  const Matrix coupling = detail::select_block(model.A(), target, source);
  const Matrix pick = detail::select_rows(Matrix::Identity(static_cast<Eigen::Index>(m),
                                                           static_cast<Eigen::Index>(m)),
                                          source);

  // Moments of (x_k, x_0): mean (A^k x0, x0), Cov(x_k) and Cov(x_k, x_0).
  Vector mean = model.x0();
  Matrix cov = model.sigma0();
  Matrix cross = model.sigma0();
  std::vector<double> values;
  values.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const Vector dev_mean = pick * (mean - model.x0());
    const Matrix dev_cov =
        pick * (cov - cross - cross.transpose() + model.sigma0()) * pick.transpose();
    const Matrix moment = symmetrize(dev_cov + dev_mean * dev_mean.transpose());
    const Matrix shifted = lower.solve(coupling * moment * coupling.transpose());
    const Matrix whitened = lower.solve(shifted.transpose());
    values.push_back(std::max(0.0, 0.5 * whitened.trace()));
    if (k < n) {
      mean = model.A() * mean;
      cov = lyapunov_step(cov, model.A(), model.B(), model.sigma());
      cross = model.A() * cross;
    }
  }
  return {source, target, KlTrajectory(std::move(values))};
}

/// All k-element subsets of {0..m-1} in lexicographic order.
inline std::vector<StateSubset> enumerate_subsets(std::size_t m, std::size_t k) {
  if (k == 0 || k >= m) {
    fail(ErrorKind::kInvalidSize, "subset size must satisfy 0 < k < m");
  }
  std::vector<StateSubset> out;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    out.emplace_back(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == m - k + (i - 1)) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

struct RankedCandidate {
  StateSubset subset;
  ItTrajectory transfer;
  double asymptotic = 0.0;
};

struct ReductionRanking {
  /// One entry per candidate subset, in lexicographic subset order.
  std::vector<RankedCandidate> candidates;
  /// Requested horizons, each <= the trajectory horizon.
  std::vector<std::size_t> horizons;
  /// Minimizer of the trajectory value at each requested horizon.
  std::vector<StateSubset> best_at_horizon;
  StateSubset best_asymptotic;

  std::size_t horizon() const {
    return horizons.empty() ? 0 : *std::max_element(horizons.begin(), horizons.end());
  }

  /// Candidate indices ordered by the value at step n (ties: lexicographic).
  std::vector<std::size_t> order_at(std::size_t n) const {
    return ordered([&](const RankedCandidate& c) { return c.transfer.values[n]; });
  }

  /// Candidate indices ordered by the asymptotic value (ties: lexicographic).
  std::vector<std::size_t> order_asymptotic() const {
    return ordered([](const RankedCandidate& c) { return c.asymptotic; });
  }

 private:
  template <typename Key>
  std::vector<std::size_t> ordered(Key key) const {
    std::vector<std::size_t> idx(candidates.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return key(candidates[a]) < key(candidates[b]);
    });
    return idx;
  }
};

struct RankingOptions {
  KlOptions kl{};
  /// Worker threads for candidate evaluation; results are merged in
  /// lexicographic order regardless of completion order.
  std::size_t jobs = 1;
};

/// Evaluates IT to the output for every k-state freeze and ranks them at each
/// horizon and asymptotically.
inline ReductionRanking rank_reductions(const LinearGaussianModel& model, std::size_t k,
                                        std::span<const std::size_t> horizons,
                                        const RankingOptions& opts = {}) {
  require_schur_stable(model);
  if (horizons.empty()) fail(ErrorKind::kInvalidArgument, "at least one horizon is required");
  const std::vector<StateSubset> subsets = enumerate_subsets(model.state_dim(), k);
  const std::size_t n = *std::max_element(horizons.begin(), horizons.end());

  std::vector<std::optional<RankedCandidate>> slots(subsets.size());
  std::vector<std::exception_ptr> errors(subsets.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < subsets.size(); i = next++) {
      try {
        ItTrajectory traj = it_state_to_output(model, subsets[i], n, opts.kl);
        const double asym = it_state_to_output_asymptotic(model, subsets[i], opts.kl);
        slots[i] = RankedCandidate{subsets[i], std::move(traj), asym};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(opts.jobs, 1, subsets.size());
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ReductionRanking ranking;
  ranking.horizons.assign(horizons.begin(), horizons.end());
  for (auto& slot : slots) ranking.candidates.push_back(std::move(*slot));
  for (std::size_t h : ranking.horizons) {
    ranking.best_at_horizon.push_back(ranking.candidates[ranking.order_at(h).front()].subset);
  }
  ranking.best_asymptotic = ranking.candidates[ranking.order_asymptotic().front()].subset;
  return ranking;
}

inline ReductionRanking rank_reductions(const LinearGaussianModel& model, std::size_t k,
                                        std::size_t horizon,
                                        const RankingOptions& opts = {}) {
  const std::size_t horizons[] = {horizon};
  return rank_reductions(model, k, std::span<const std::size_t>(horizons), opts);
}

}  // namespace infotrans
