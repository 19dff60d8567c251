#include "proxfed/linalg.hpp"

#include <cmath>

namespace proxfed {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension_mismatch: return "dimension mismatch";
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::no_minimizer: return "no minimizer";
    case ErrorKind::infeasible_spec: return "infeasible spec";
    case ErrorKind::parse_error: return "parse error";
    case ErrorKind::data_unreadable: return "data unreadable";
    case ErrorKind::invalid_config: return "invalid config";
    case ErrorKind::invalid_override: return "invalid override";
  }
  return "unknown";
}

EigenEstimate power_iteration(const std::function<Vector(const Vector&)>& matvec,
                              Eigen::Index dim, const PowerIterationOptions& opts) {
  EigenEstimate est;
  if (dim == 0) {
    est.converged = true;
    return est;
  }
  Rng rng(opts.seed);
  std::normal_distribution<double> normal;
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = normal(rng);
  v.normalize();

  for (std::size_t it = 1; it <= opts.max_iters; ++it) {
    Vector av = matvec(v);
    const double rho = v.dot(av);
    const double av_norm = av.norm();
    est.value = rho;
    est.iterations = it;
    if (av_norm == 0.0) {
      // v lies in the null space; for a PSD operator that only happens
      // reliably when the operator is zero.
      est.value = 0.0;
      est.converged = true;
      return est;
    }
    const double residual = (av - rho * v).norm();
    if (residual <= opts.rel_tol * std::abs(rho)) {
      est.converged = true;
      return est;
    }
    v = av / av_norm;
  }
  return est;
}

EigenEstimate power_iteration(const Matrix& sym_psd, const PowerIterationOptions& opts) {
  return power_iteration([&](const Vector& v) -> Vector { return sym_psd * v; },
                         sym_psd.rows(), opts);
}

double max_eigenvalue_dense(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double min_eigenvalue(const Matrix& sym, const PowerIterationOptions& opts) {
  if (sym.rows() <= 512) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  const double top = power_iteration(sym, opts).value;
  const Matrix shifted = top * Matrix::Identity(sym.rows(), sym.cols()) - sym;
  return top - power_iteration(shifted, opts).value;
}

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

}  // namespace proxfed
