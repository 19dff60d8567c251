#ifndef PROXFED_LINALG_HPP
#define PROXFED_LINALG_HPP

#include <cstdint>
#include <functional>

#include "proxfed/types.hpp"

namespace proxfed {

struct PowerIterationOptions {
  double rel_tol = 1e-8;
  std::size_t max_iters = 10000;
  std::uint64_t seed = 0x5eedULL;
};

struct EigenEstimate {
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Largest eigenvalue of a symmetric PSD operator given as a matvec.
/// Stops once the eigen-residual ||Av - rho v|| falls below rel_tol * rho.
EigenEstimate power_iteration(const std::function<Vector(const Vector&)>& matvec,
                              Eigen::Index dim, const PowerIterationOptions& opts = {});

EigenEstimate power_iteration(const Matrix& sym_psd, const PowerIterationOptions& opts = {});

/// Smallest eigenvalue of a symmetric matrix. Dense eigensolve for d <= 512,
/// shifted power iteration above that.
double min_eigenvalue(const Matrix& sym, const PowerIterationOptions& opts = {});

/// Largest eigenvalue of a symmetric matrix by dense eigensolve.
double max_eigenvalue_dense(const Matrix& sym);

bool is_symmetric(const Matrix& m, double rel_tol = 1e-12);

}  // namespace proxfed

#endif  // PROXFED_LINALG_HPP
