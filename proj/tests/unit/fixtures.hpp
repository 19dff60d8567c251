#ifndef PROXFED_TESTS_FIXTURES_HPP
#define PROXFED_TESTS_FIXTURES_HPP

// Hand-rolled generators shared by the unit tests.

#include <cmath>
#include <random>

#include "proxfed/problem.hpp"

namespace fx {

using proxfed::ClientObjective;
using proxfed::FederatedProblem;
using proxfed::Matrix;
using proxfed::Vector;

inline Vector gaussian(Eigen::Index d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = n(rng);
  return v;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Matrix orthogonal(Eigen::Index d, std::mt19937_64& rng) {
  Matrix g(d, d);
  for (Eigen::Index j = 0; j < d; ++j) g.col(j) = gaussian(d, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ();
}

/// Symmetric matrix with eigenvalues drawn uniformly from [lo, hi], the
/// extremes included.
inline Matrix spd(Eigen::Index d, double lo, double hi, std::mt19937_64& rng) {
  Vector e(d);
  for (Eigen::Index i = 0; i < d; ++i) e(i) = uniform(rng, lo, hi);
  e(0) = lo;
  if (d > 1) e(d - 1) = hi;
  const Matrix q = orthogonal(d, rng);
  Matrix h = q * e.asDiagonal() * q.transpose();
  return 0.5 * (h + h.transpose());
}

inline ClientObjective quad(const Matrix& h, const Vector& c, double offset = 0.0) {
  return ClientObjective::quadratic(h, c, offset);
}

/// M quadratic clients with Hessians spectra in [mu, L] and Gaussian linear terms.
inline FederatedProblem random_problem(std::size_t M, Eigen::Index d, double mu, double L,
                                       std::uint64_t seed, double linear_scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::vector<ClientObjective> clients;
  for (std::size_t m = 0; m < M; ++m) {
    clients.push_back(quad(spd(d, mu, L, rng), gaussian(d, rng, linear_scale)));
  }
  return FederatedProblem(std::move(clients));
}

/// Clients sharing the minimizer x_star (sigma*^2 = 0).
inline FederatedProblem interpolation_problem(std::size_t M, Eigen::Index d, double mu, double L,
                                              const Vector& x_star, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ClientObjective> clients;
  for (std::size_t m = 0; m < M; ++m) {
    const Matrix h = spd(d, mu, L, rng);
    clients.push_back(quad(h, -h * x_star));
  }
  return FederatedProblem(std::move(clients));
}

/// f_1 = a x^2, f_2 = 2 a x^2 in one dimension.
inline FederatedProblem example_pair(double a) {
  std::vector<ClientObjective> clients;
  clients.push_back(quad(Matrix::Constant(1, 1, 2.0 * a), Vector::Zero(1)));
  clients.push_back(quad(Matrix::Constant(1, 1, 4.0 * a), Vector::Zero(1)));
  return FederatedProblem(std::move(clients));
}

inline Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

/// Dense oracle for sqrt(lambda_max((1/M) sum (H_m - Hbar)^2)).
inline double dense_delta(const FederatedProblem& p) {
  const Eigen::Index d = p.dim();
  Matrix hbar = Matrix::Zero(d, d);
  for (const auto& c : p.clients()) hbar += c.hessian();
  hbar /= static_cast<double>(p.num_clients());
  Matrix D = Matrix::Zero(d, d);
  for (const auto& c : p.clients()) {
    const Matrix dev = c.hessian() - hbar;
    D += dev * dev;
  }
  D /= static_cast<double>(p.num_clients());
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (D + D.transpose()));
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

}  // namespace fx

#endif  // PROXFED_TESTS_FIXTURES_HPP
