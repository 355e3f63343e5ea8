#pragma once

// Shared models and random generators for the test suites.

#include <random>

#include "infotrans/klmetrics.hpp"
#include "infotrans/linmodel.hpp"

namespace infotrans::testing {

// Two decoupled states, A = diag(0.99, 0.8), C = [1 0.2], B = [1 1]^T.
inline DecoupledParams table2_params() { return DecoupledParams{0.99, 0.8, 1.0, 0.2}; }

inline LinearGaussianModel decoupled_model(const DecoupledParams& p, Vector x0 = Vector::Ones(2)) {
  Matrix a(2, 2);
  a << p.a11, 0.0, 0.0, p.a22;
  Matrix b(2, 1);
  b << 1.0, 1.0;
  Matrix c(1, 2);
  c << p.c1, p.c2;
  Matrix s0 = Matrix::Zero(2, 2);
  s0(0, 0) = p.sigma0_11;
  s0(1, 1) = p.sigma0_22;
  return LinearGaussianModel(a, b, c, Matrix::Zero(1, 1), p.sigma, std::move(x0), s0,
                             "decoupled");
}

inline LinearGaussianModel table2_model() { return decoupled_model(table2_params()); }

inline LinearGaussianModel four_state_model() {
  Matrix a(4, 4);
  a << 0.991, 0.015, -0.007, 0.003,
      -0.006, 0.927, 0.074, -0.034,
       0.001, -0.015, 0.813, 0.195,
       0.000, -0.002, 0.025, 0.309;
  Matrix c(1, 4);
  c << 1.281, -1.065, 0.506, -0.237;
  return LinearGaussianModel::with_defaults(a, Matrix::Identity(4, 4), c, 1.0, "four_state");
}

// State 1 drives state 2; nothing flows back.
inline LinearGaussianModel one_way_model() {
  Matrix a(2, 2);
  a << 0.7, 0.0,
       0.5, 0.6;
  Matrix c(1, 2);
  c << 0.0, 1.0;
  return LinearGaussianModel::with_defaults(a, Matrix::Identity(2, 2), c, 1.0, "one_way");
}

// Three coupled states with a nonzero initial mean and correlated Sigma0.
inline LinearGaussianModel coupled_model() {
  Matrix a(3, 3);
  a << 0.85, 0.10, 0.00,
       0.30, 0.70, 0.05,
       0.10, 0.20, 0.50;
  Matrix b(3, 3);
  b << 1.0, 0.2, 0.0,
       0.0, 0.8, 0.3,
       0.1, 0.0, 0.6;
  Matrix c(2, 3);
  c << 1.0, 0.0, 0.5,
       0.0, 1.0, -0.4;
  Matrix d(2, 3);
  d << 0.3, 0.0, 0.0,
       0.0, 0.0, 0.2;
  Vector x0(3);
  x0 << 1.0, -0.5, 2.0;
  Matrix s0(3, 3);
  s0 << 1.0, 0.3, 0.0,
        0.3, 0.8, 0.1,
        0.0, 0.1, 0.5;
  return LinearGaussianModel(a, b, c, d, 0.9, x0, s0, "coupled");
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                            double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = n(rng);
  }
  return m;
}

// Random Schur-stable matrix with spectral radius `radius`.
inline Matrix random_stable(std::mt19937_64& rng, Eigen::Index m, double radius) {
  Matrix a = random_matrix(rng, m, m);
  return a * (radius / spectral_radius(a));
}

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index m, double floor = 0.1) {
  const Matrix g = random_matrix(rng, m, m);
  return g * g.transpose() + floor * Matrix::Identity(m, m);
}

inline LinearGaussianModel random_model(std::mt19937_64& rng, Eigen::Index m, Eigen::Index p,
                                        Eigen::Index q, double radius = 0.9) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  return LinearGaussianModel(random_stable(rng, m, radius), random_matrix(rng, m, p),
                             random_matrix(rng, q, m), random_matrix(rng, q, p, 0.5), u(rng),
                             random_matrix(rng, m, 1), random_spd(rng, m), "random");
}

inline DecoupledParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(-0.98, 0.98);
  std::uniform_real_distribution<double> c(-2.0, 2.0);
  std::uniform_real_distribution<double> s(0.2, 2.0);
  DecoupledParams p;
  do {
    p = DecoupledParams{a(rng), a(rng), c(rng), c(rng), s(rng), s(rng), s(rng)};
  } while (std::abs(p.c1 + p.c2) < 0.05);
  return p;
}

}  // namespace infotrans::testing
