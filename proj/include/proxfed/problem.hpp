#ifndef PROXFED_PROBLEM_HPP
#define PROXFED_PROBLEM_HPP

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/SparseCore>

#include "proxfed/linalg.hpp"
#include "proxfed/types.hpp"

namespace proxfed {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class ObjectiveKind { explicit_quadratic, dataset_ridge };

/// A quadratic addition (gamma/2)||x - center||^2 shared by every client of a
/// problem. Catalyst builds its subproblems h_t out of it.
struct Tilt {
  double gamma = 0.0;
  Vector center;
};

/// One client's loss f_m.
///
/// explicit-quadratic: f(x) = 1/2 x'Hx + c'x + offset.
/// dataset-ridge:      f(x) = (1/n) sum_i (z_i'x - y_i)^2 + (lambda/2)||x||^2,
///                     whose Hessian (2/n)Z'Z + lambda I and linear term
///                     -(2/n)Z'y are materialized once at construction.
///
/// Copies are cheap: the matrices are shared.
class ClientObjective {
 public:
  /// mu <= 0 means "compute lambda_min(H) now".
  static ClientObjective quadratic(Matrix hessian, Vector linear, double offset = 0.0,
                                   double mu = 0.0);
  static ClientObjective ridge(SparseRows features, Vector labels, double lambda);

  ObjectiveKind kind() const noexcept { return kind_; }
  Eigen::Index dim() const noexcept { return quad_->linear.size(); }
  double mu() const noexcept { return mu_ + tilt_gamma(); }

  /// Hessian without the tilt.
  const Matrix& base_hessian() const noexcept { return quad_->hessian; }
  const Vector& base_linear() const noexcept { return quad_->linear; }
  double base_offset() const noexcept { return quad_->offset; }

  /// Hessian including the tilt (materialized).
  Matrix hessian() const;
  /// Linear term including the tilt.
  Vector linear() const;

  double lambda() const noexcept { return ridge_ ? ridge_->lambda : 0.0; }
  const SparseRows* features() const noexcept { return ridge_ ? &ridge_->features : nullptr; }
  const Vector* labels() const noexcept { return ridge_ ? &ridge_->labels : nullptr; }

  double tilt_gamma() const noexcept { return tilt_ ? tilt_->gamma : 0.0; }
  const Tilt* tilt() const noexcept { return tilt_.get(); }

  ClientObjective with_tilt(std::shared_ptr<const Tilt> tilt) const;

  /// Identity of the shared curvature data (for factorization caches).
  const void* curvature_id() const noexcept { return quad_.get(); }

 private:
  struct QuadraticData {
    Matrix hessian;
    Vector linear;
    double offset = 0.0;
  };
  struct RidgeData {
    SparseRows features;
    Vector labels;
    double lambda = 0.0;
  };

  ObjectiveKind kind_ = ObjectiveKind::explicit_quadratic;
  std::shared_ptr<const QuadraticData> quad_;
  std::shared_ptr<const RidgeData> ridge_;
  std::shared_ptr<const Tilt> tilt_;
  double mu_ = 0.0;

  friend double eval_value(const ClientObjective&, const Vector&);
  friend Vector eval_grad(const ClientObjective&, const Vector&);
};

double eval_value(const ClientObjective& obj, const Vector& x);
Vector eval_grad(const ClientObjective& obj, const Vector& x);

enum class RegularizerKind { none, l1, ball };

struct Regularizer {
  RegularizerKind kind = RegularizerKind::none;
  double weight = 0.0;   // l1
  double radius = 0.0;   // ball

  static Regularizer none() { return {}; }
  static Regularizer l1(double weight);
  static Regularizer ball(double radius);

  bool is_none() const noexcept { return kind == RegularizerKind::none; }
  /// R(x); +inf outside the ball.
  double value(const Vector& x) const;
};

struct ProblemConstants {
  double mu = 0.0;
  double L = 0.0;
  double delta = 0.0;
  double sigma_star_sq = 0.0;
  Vector x_star;
  double f_star = 0.0;

  double kappa() const { return L / mu; }
};

class FederatedProblem {
 public:
  explicit FederatedProblem(std::vector<ClientObjective> clients,
                            Regularizer reg = Regularizer::none());

  std::size_t num_clients() const noexcept { return clients_->size(); }
  Eigen::Index dim() const noexcept { return dim_; }
  const ClientObjective& client(std::size_t m) const { return (*clients_)[m]; }
  const std::vector<ClientObjective>& clients() const noexcept { return *clients_; }
  const Regularizer& regularizer() const noexcept { return reg_; }

  /// Every client gains (gamma/2)||x - center||^2.
  FederatedProblem tilted(double gamma, const Vector& center) const;
  FederatedProblem with_regularizer(Regularizer reg) const;

  double tilt_gamma() const noexcept;

  /// f(x) = (1/M) sum_m f_m(x).
  double smooth_value(const Vector& x) const;
  /// F(x) = f(x) + R(x).
  double value(const Vector& x) const;

  /// Computed on first use with default tolerance, then shared by copies.
  const ProblemConstants& constants() const;

 private:
  struct ConstantsCache;

  std::shared_ptr<const std::vector<ClientObjective>> clients_;
  Regularizer reg_;
  Eigen::Index dim_ = 0;
  std::shared_ptr<ConstantsCache> cache_;
};

/// Mean of client gradients, summed in ascending client order.
Vector full_grad(const FederatedProblem& problem, const Vector& x);

/// Averaged Hessian and linear term of the smooth part.
Matrix mean_hessian(const FederatedProblem& problem);
Vector mean_linear(const FederatedProblem& problem);

ProblemConstants compute_constants(const FederatedProblem& problem, double tol = 1e-8);

/// sqrt(lambda_max(D)), D = (1/M) sum_m (H_m - Hbar)^2, by power iteration.
double estimate_delta(const FederatedProblem& problem, double tol = 1e-8);

/// (1/M) sum_m ||grad f_m(x_star)||^2.
double sigma_star_sq(const FederatedProblem& problem, const Vector& x_star);

/// Minimizer of f + R by accelerated proximal gradient on the full objective.
Vector solve_composite(const FederatedProblem& problem, double tol = 1e-13,
                       std::size_t max_iters = 200000);

/// Left side of the similarity inequality divided by ||x - y||^2:
/// (1/M) sum ||grad f_m(x) - grad f(x) - grad f_m(y) + grad f(y)||^2 / ||x-y||^2.
double similarity_ratio(const FederatedProblem& problem, const Vector& x, const Vector& y);

}  // namespace proxfed

#endif  // PROXFED_PROBLEM_HPP
