#pragma once

/// \file linmodel.hpp
/// Discrete-time linear Gaussian state-space models
///
///   x_{t+1} = A x_t + B d_t,   y_t = C x_t + D d_t,   d_t ~ N(0, sigma^2 I),
///
/// with initial belief x_0 ~ N(x0, Sigma0), plus the state-freezing
/// construction used to build reduction candidates.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "infotrans/linalg.hpp"
#include "infotrans/types.hpp"

namespace infotrans {

class LinearGaussianModel {
 public:
  LinearGaussianModel(Matrix a, Matrix b, Matrix c, Matrix d, double sigma,
                      Vector x0, Matrix sigma0, std::string name = {})
      : a_(std::move(a)),
        b_(std::move(b)),
        c_(std::move(c)),
        d_(std::move(d)),
        sigma_(sigma),
        x0_(std::move(x0)),
        sigma0_(std::move(sigma0)),
        name_(std::move(name)) {
    check();
  }

  /// D = 0, x0 = 0, Sigma0 = I.
  static LinearGaussianModel with_defaults(Matrix a, Matrix b, Matrix c,
                                           double sigma = 1.0,
                                           std::string name = {}) {
    const Eigen::Index m = a.rows();
    Matrix d = Matrix::Zero(c.rows(), b.cols());
    return LinearGaussianModel(std::move(a), std::move(b), std::move(c),
                               std::move(d), sigma, Vector::Zero(m),
                               Matrix::Identity(m, m), std::move(name));
  }

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  const Matrix& C() const { return c_; }
  const Matrix& D() const { return d_; }
  double sigma() const { return sigma_; }
  const Vector& x0() const { return x0_; }
  const Matrix& sigma0() const { return sigma0_; }
  const std::string& name() const { return name_; }

  std::size_t state_dim() const { return static_cast<std::size_t>(a_.rows()); }
  std::size_t noise_dim() const { return static_cast<std::size_t>(b_.cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(c_.rows()); }

  LinearGaussianModel with_transition(Matrix a) const {
    return LinearGaussianModel(std::move(a), b_, c_, d_, sigma_, x0_, sigma0_, name_);
  }

  LinearGaussianModel with_initial_belief(Vector x0, Matrix sigma0) const {
    return LinearGaussianModel(a_, b_, c_, d_, sigma_, std::move(x0),
                               std::move(sigma0), name_);
  }

 private:
  void check() const {
    const auto m = a_.rows();
    auto mismatch = [](const std::string& what) {
      fail(ErrorKind::kDimensionMismatch, what);
    };
    if (m == 0 || a_.cols() != m) mismatch("A must be a nonempty square matrix");
    if (b_.rows() != m) mismatch("B must have as many rows as A");
    if (b_.cols() == 0) mismatch("B must have at least one column");
    if (c_.cols() != m) mismatch("C must have as many columns as A");
    if (c_.rows() == 0) mismatch("C must have at least one row");
    if (d_.rows() != c_.rows() || d_.cols() != b_.cols()) {
      mismatch("D must be q x p (rows of C by columns of B)");
    }
    if (x0_.size() != m) mismatch("x0 must have one entry per state");
    if (sigma0_.rows() != m || sigma0_.cols() != m) mismatch("Sigma0 must be m x m");

    if (!(a_.allFinite() && b_.allFinite() && c_.allFinite() && d_.allFinite() &&
          x0_.allFinite() && sigma0_.allFinite())) {
      fail(ErrorKind::kInvalidArgument, "model entries must be finite");
    }
    if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) {
      fail(ErrorKind::kInvalidArgument, "noise scale sigma must be positive");
    }
    const double scale = std::max(1.0, detail::max_abs(sigma0_));
    if (detail::max_abs(sigma0_ - sigma0_.transpose()) > 1e-12 * scale) {
      fail(ErrorKind::kNotPositiveSemidefinite, "Sigma0 must be symmetric");
    }
    if (min_eigenvalue(symmetrize(sigma0_)) < -kPsdTolerance) {
      fail(ErrorKind::kNotPositiveSemidefinite,
           "Sigma0 must be positive semidefinite");
    }
  }

  Matrix a_, b_, c_, d_;
  double sigma_;
  Vector x0_;
  Matrix sigma0_;
  std::string name_;
};

struct ValidationReport {
  double spectral_radius = 0.0;
  bool is_schur_stable = false;
  bool observable = false;
  bool controllable = false;
  std::vector<std::string> messages;
};

/// Stability from eigenvalue moduli; observability and controllability from
/// the rank of the m-block Kalman matrices (relative cutoff kRankTolerance).
inline ValidationReport validate(const LinearGaussianModel& model) {
  ValidationReport report;
  const std::size_t m = model.state_dim();
  report.spectral_radius = spectral_radius(model.A());
  report.is_schur_stable = report.spectral_radius < 1.0;
  report.observable = numerical_rank(observability_matrix(model.A(), model.C())) == m;
  report.controllable =
      numerical_rank(controllability_matrix(model.A(), model.B())) == m;
  if (!report.is_schur_stable) {
    report.messages.push_back("spectral radius " +
                              std::to_string(report.spectral_radius) +
                              " is not inside the unit circle");
  }
  if (!report.observable) report.messages.push_back("(A, C) is not observable");
  if (!report.controllable) report.messages.push_back("(A, B) is not controllable");
  return report;
}

/// Throws Unstable unless every eigenvalue of A is strictly inside the unit
/// circle. Required of every model treated as the truth.
inline void require_schur_stable(const LinearGaussianModel& model) {
  const double rho = spectral_radius(model.A());
  if (!(rho < 1.0)) {
    fail(ErrorKind::kUnstable,
         "model '" + model.name() + "' has spectral radius " + std::to_string(rho) +
             " (must be < 1)");
  }
}

/// A model with a subset of states held constant: each frozen row of the
/// transition matrix becomes the matching standard basis row. Coupling from
/// frozen states into the remaining states, the noise input B and the output
/// map are kept as in the base model.
class FrozenModel {
 public:
  FrozenModel(LinearGaussianModel base, StateSubset frozen, Vector frozen_value)
      : base_(std::move(base)),
        frozen_(std::move(frozen)),
        frozen_value_(std::move(frozen_value)) {
    frozen_.check_against(base_.state_dim());
    if (static_cast<std::size_t>(frozen_value_.size()) != frozen_.size()) {
      fail(ErrorKind::kLengthMismatch,
           "frozen value has " + std::to_string(frozen_value_.size()) +
               " entries for " + std::to_string(frozen_.size()) + " frozen states");
    }
    transition_ = base_.A();
    Vector start = base_.x0();
    for (std::size_t k = 0; k < frozen_.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(frozen_[k]);
      transition_.row(i).setZero();
      transition_(i, i) = 1.0;
      start(i) = frozen_value_(static_cast<Eigen::Index>(k));
    }
    model_ = std::make_optional<LinearGaussianModel>(
        transition_, base_.B(), base_.C(), base_.D(), base_.sigma(), start,
        base_.sigma0(), base_.name() + " frozen " + frozen_.label());
  }

  const LinearGaussianModel& base() const { return base_; }
  const StateSubset& frozen() const { return frozen_; }
  const Vector& frozen_value() const { return frozen_value_; }

  /// Effective transition matrix.
  const Matrix& transition() const { return transition_; }

  /// The frozen model as an ordinary model. Its initial mean carries the
  /// frozen value at the frozen indices; the initial covariance is the base's.
  const LinearGaussianModel& as_model() const { return *model_; }

 private:
  LinearGaussianModel base_;
  StateSubset frozen_;
  Vector frozen_value_;
  Matrix transition_;
  std::optional<LinearGaussianModel> model_;
};

/// Freezes `subset`; the frozen value defaults to the matching entries of x0.
inline FrozenModel freeze(const LinearGaussianModel& model, const StateSubset& subset,
                          std::optional<Vector> frozen_value = std::nullopt) {
  subset.check_against(model.state_dim());
  Vector value = frozen_value ? std::move(*frozen_value)
                              : detail::select_entries(model.x0(), subset);
  return FrozenModel(model, subset, std::move(value));
}

/// Block view of a model under the split x = (a, b), where `a` collects the
/// subset indices and `b` the remaining ones, both in increasing order.
struct BlockPartition {
  StateSubset a;
  StateSubset b;
  Matrix A11, A12, A21, A22;
  Matrix B1, B2;
  Matrix C1, C2;
};

inline BlockPartition partition(const LinearGaussianModel& model,
                                const StateSubset& subset) {
  subset.check_against(model.state_dim());
  BlockPartition p;
  p.a = subset;
  p.b = subset.complement(model.state_dim());
  using detail::select_block;
  using detail::select_cols;
  using detail::select_rows;
  p.A11 = select_block(model.A(), p.a, p.a);
  p.A12 = select_block(model.A(), p.a, p.b);
  p.A21 = select_block(model.A(), p.b, p.a);
  p.A22 = select_block(model.A(), p.b, p.b);
  p.B1 = select_rows(model.B(), p.a);
  p.B2 = select_rows(model.B(), p.b);
  p.C1 = select_cols(model.C(), p.a);
  p.C2 = select_cols(model.C(), p.b);
  return p;
}

struct ReassembledMatrices {
  Matrix A, B, C;
};

/// Inverse of `partition`: scatters the blocks back to original ordering.
inline ReassembledMatrices reassemble(const BlockPartition& p) {
  const auto m = static_cast<Eigen::Index>(p.a.size() + p.b.size());
  const Eigen::Index noise = p.B1.rows() > 0 ? p.B1.cols() : p.B2.cols();
  const Eigen::Index outputs = p.C1.cols() > 0 ? p.C1.rows() : p.C2.rows();
  ReassembledMatrices out{Matrix(m, m), Matrix(m, noise), Matrix(outputs, m)};

  auto scatter = [&](const StateSubset& rows, const StateSubset& cols,
                     const Matrix& block) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < cols.size(); ++j) {
        out.A(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j])) =
            block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  };
  scatter(p.a, p.a, p.A11);
  scatter(p.a, p.b, p.A12);
  scatter(p.b, p.a, p.A21);
  scatter(p.b, p.b, p.A22);

  auto scatter_io = [&](const StateSubset& idx, const Matrix& rows_of_b,
                        const Matrix& cols_of_c) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto oi = static_cast<Eigen::Index>(idx[i]);
      const auto ii = static_cast<Eigen::Index>(i);
      out.B.row(oi) = rows_of_b.row(ii);
      out.C.col(oi) = cols_of_c.col(ii);
    }
  };
  scatter_io(p.a, p.B1, p.C1);
  scatter_io(p.b, p.B2, p.C2);
  return out;
}

}  // namespace infotrans
