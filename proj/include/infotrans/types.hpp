#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "infotrans/errors.hpp"

namespace infotrans {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Sorted, duplicate-free set of zero-based state indices.
///
/// The subset is independent of any particular model; `check_against(m)`
/// verifies that every index addresses a state of an m-state model.
class StateSubset {
 public:
  StateSubset() = default;

  explicit StateSubset(std::vector<std::size_t> indices)
      : indices_(std::move(indices)) {
    for (std::size_t i = 1; i < indices_.size(); ++i) {
      if (indices_[i] <= indices_[i - 1]) {
        fail(ErrorKind::kInvalidSubset,
             "state subset must be strictly increasing: " + to_string());
      }
    }
  }

  StateSubset(std::initializer_list<std::size_t> indices)
      : StateSubset(std::vector<std::size_t>(indices)) {}

  /// Sorts and validates arbitrary input; duplicates are an error.
  static StateSubset from_unordered(std::vector<std::size_t> indices) {
    std::sort(indices.begin(), indices.end());
    return StateSubset(std::move(indices));
  }

  static StateSubset all(std::size_t m) {
    std::vector<std::size_t> idx(m);
    for (std::size_t i = 0; i < m; ++i) idx[i] = i;
    return StateSubset(std::move(idx));
  }

  std::span<const std::size_t> indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  std::size_t operator[](std::size_t i) const { return indices_[i]; }
  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  bool contains(std::size_t index) const {
    return std::binary_search(indices_.begin(), indices_.end(), index);
  }

  void check_against(std::size_t m) const {
    if (!indices_.empty() && indices_.back() >= m) {
      fail(ErrorKind::kIndexOutOfRange,
           "state index " + std::to_string(indices_.back()) +
               " out of range for a " + std::to_string(m) + "-state model");
    }
  }

  /// Indices of [0, m) not in this subset.
  StateSubset complement(std::size_t m) const {
    check_against(m);
    std::vector<std::size_t> rest;
    rest.reserve(m - indices_.size());
    for (std::size_t i = 0; i < m; ++i) {
      if (!contains(i)) rest.push_back(i);
    }
    return StateSubset(std::move(rest));
  }

  bool disjoint_with(const StateSubset& other) const {
    return std::none_of(indices_.begin(), indices_.end(),
                        [&](std::size_t i) { return other.contains(i); });
  }

  /// Zero-based rendering, e.g. "{2,3}".
  std::string to_string() const { return render('{', '}', 0); }

  /// One-based rendering as printed in reports, e.g. "(3,4)".
  std::string label() const { return render('(', ')', 1); }

  friend bool operator==(const StateSubset&, const StateSubset&) = default;
  friend auto operator<=>(const StateSubset& a, const StateSubset& b) {
    return a.indices_ <=> b.indices_;
  }

 private:
  std::string render(char open, char close, std::size_t offset) const {
    std::string out(1, open);
    for (std::size_t i = 0; i < indices_.size(); ++i) {
      if (i > 0) out += ',';
      out += std::to_string(indices_[i] + offset);
    }
    out += close;
    return out;
  }

  std::vector<std::size_t> indices_;
};

namespace detail {

inline Matrix select_rows(const Matrix& m, const StateSubset& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

inline Matrix select_cols(const Matrix& m, const StateSubset& cols) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out.col(static_cast<Eigen::Index>(c)) = m.col(static_cast<Eigen::Index>(cols[c]));
  }
  return out;
}

inline Matrix select_block(const Matrix& m, const StateSubset& rows,
                           const StateSubset& cols) {
  return select_cols(select_rows(m, rows), cols);
}

inline Vector select_entries(const Vector& v, const StateSubset& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace detail
}  // namespace infotrans
