#include "proxfed/problem.hpp"

#include <cmath>
#include <limits>
#include <mutex>

namespace proxfed {

ClientObjective ClientObjective::quadratic(Matrix hessian, Vector linear, double offset,
                                           double mu) {
  require(hessian.rows() == hessian.cols(), ErrorKind::invalid_argument,
          "client Hessian must be square");
  require_dim(linear.size(), hessian.rows(), "client linear term");
  require(is_symmetric(hessian, 1e-12), ErrorKind::invalid_argument,
          "client Hessian is not symmetric");
  require(hessian.allFinite() && linear.allFinite() && std::isfinite(offset),
          ErrorKind::invalid_argument, "client data must be finite");

  ClientObjective obj;
  obj.kind_ = ObjectiveKind::explicit_quadratic;
  obj.mu_ = mu > 0.0 ? mu : min_eigenvalue(hessian);
  obj.quad_ = std::make_shared<QuadraticData>(
      QuadraticData{std::move(hessian), std::move(linear), offset});
  return obj;
}

ClientObjective ClientObjective::ridge(SparseRows features, Vector labels, double lambda) {
  require(features.rows() == labels.size(), ErrorKind::invalid_argument,
          "ridge client: feature rows and labels differ in length");
  require(features.rows() > 0, ErrorKind::invalid_argument, "ridge client has no samples");
  require(lambda >= 0.0, ErrorKind::invalid_argument, "ridge coefficient must be >= 0");

  const double n = static_cast<double>(features.rows());
  const Eigen::Index d = features.cols();
  Matrix gram = Matrix(features.transpose() * features);
  Matrix hessian = (2.0 / n) * gram;
  hessian.diagonal().array() += lambda;
  hessian = 0.5 * (hessian + hessian.transpose()).eval();
  Vector linear = -(2.0 / n) * (features.transpose() * labels);
  const double offset = labels.squaredNorm() / n;

  ClientObjective obj;
  obj.kind_ = ObjectiveKind::dataset_ridge;
  obj.mu_ = lambda > 0.0 ? lambda : std::max(0.0, min_eigenvalue(hessian));
  obj.quad_ = std::make_shared<QuadraticData>(
      QuadraticData{std::move(hessian), std::move(linear), offset});
  obj.ridge_ = std::make_shared<RidgeData>(RidgeData{std::move(features), std::move(labels), lambda});
  (void)d;
  return obj;
}

Matrix ClientObjective::hessian() const {
  Matrix h = quad_->hessian;
  if (tilt_) h.diagonal().array() += tilt_->gamma;
  return h;
}

Vector ClientObjective::linear() const {
  if (!tilt_) return quad_->linear;
  return quad_->linear - tilt_->gamma * tilt_->center;
}

ClientObjective ClientObjective::with_tilt(std::shared_ptr<const Tilt> tilt) const {
  ClientObjective copy = *this;
  copy.tilt_ = std::move(tilt);
  return copy;
}

double eval_value(const ClientObjective& obj, const Vector& x) {
  require_dim(x.size(), obj.dim(), "eval_value");
  double v = 0.0;
  if (obj.ridge_) {
    const auto& r = *obj.ridge_;
    const Vector resid = r.features * x - r.labels;
    v = resid.squaredNorm() / static_cast<double>(r.features.rows()) +
        0.5 * r.lambda * x.squaredNorm();
  } else {
    const auto& q = *obj.quad_;
    v = 0.5 * x.dot(q.hessian * x) + q.linear.dot(x) + q.offset;
  }
  if (obj.tilt_) v += 0.5 * obj.tilt_->gamma * (x - obj.tilt_->center).squaredNorm();
  return v;
}

Vector eval_grad(const ClientObjective& obj, const Vector& x) {
  require_dim(x.size(), obj.dim(), "eval_grad");
  Vector g = obj.quad_->hessian * x + obj.quad_->linear;
  if (obj.tilt_) g += obj.tilt_->gamma * (x - obj.tilt_->center);
  return g;
}

Regularizer Regularizer::l1(double weight) {
  require(weight > 0.0, ErrorKind::invalid_argument, "l1 weight must be > 0");
  Regularizer r;
  r.kind = RegularizerKind::l1;
  r.weight = weight;
  return r;
}

Regularizer Regularizer::ball(double radius) {
  require(radius > 0.0, ErrorKind::invalid_argument, "ball radius must be > 0");
  Regularizer r;
  r.kind = RegularizerKind::ball;
  r.radius = radius;
  return r;
}

double Regularizer::value(const Vector& x) const {
  switch (kind) {
    case RegularizerKind::none: return 0.0;
    case RegularizerKind::l1: return weight * x.lpNorm<1>();
    case RegularizerKind::ball:
      return x.norm() <= radius * (1.0 + 1e-12) ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

struct FederatedProblem::ConstantsCache {
  std::once_flag once;
  std::optional<ProblemConstants> value;
};

FederatedProblem::FederatedProblem(std::vector<ClientObjective> clients, Regularizer reg)
    : reg_(reg), cache_(std::make_shared<ConstantsCache>()) {
  require(!clients.empty(), ErrorKind::invalid_argument, "a problem needs at least one client");
  dim_ = clients.front().dim();
  std::optional<double> lambda;
  for (const auto& c : clients) {
    require_dim(c.dim(), dim_, "client dimension");
    if (c.kind() == ObjectiveKind::dataset_ridge) {
      if (!lambda) lambda = c.lambda();
      require(*lambda == c.lambda(), ErrorKind::invalid_argument,
              "dataset clients must share the ridge coefficient");
    }
  }
  clients_ = std::make_shared<const std::vector<ClientObjective>>(std::move(clients));
}

FederatedProblem FederatedProblem::tilted(double gamma, const Vector& center) const {
  require(gamma >= 0.0, ErrorKind::invalid_argument, "tilt must be >= 0");
  require_dim(center.size(), dim_, "tilt center");
  auto tilt = std::make_shared<const Tilt>(Tilt{gamma, center});
  std::vector<ClientObjective> shifted;
  shifted.reserve(num_clients());
  for (const auto& c : *clients_) shifted.push_back(c.with_tilt(tilt));
  return FederatedProblem(std::move(shifted), reg_);
}

FederatedProblem FederatedProblem::with_regularizer(Regularizer reg) const {
  FederatedProblem copy = *this;
  copy.reg_ = reg;
  copy.cache_ = std::make_shared<ConstantsCache>();
  return copy;
}

double FederatedProblem::tilt_gamma() const noexcept {
  return clients_->front().tilt_gamma();
}

double FederatedProblem::smooth_value(const Vector& x) const {
  double sum = 0.0;
  for (const auto& c : *clients_) sum += eval_value(c, x);
  return sum / static_cast<double>(num_clients());
}

double FederatedProblem::value(const Vector& x) const {
  return smooth_value(x) + reg_.value(x);
}

const ProblemConstants& FederatedProblem::constants() const {
  std::call_once(cache_->once, [&] { cache_->value = compute_constants(*this); });
  return *cache_->value;
}

Vector full_grad(const FederatedProblem& problem, const Vector& x) {
  require_dim(x.size(), problem.dim(), "full_grad");
  Vector sum = Vector::Zero(problem.dim());
  for (const auto& c : problem.clients()) sum += eval_grad(c, x);
  return sum / static_cast<double>(problem.num_clients());
}

Matrix mean_hessian(const FederatedProblem& problem) {
  const Eigen::Index d = problem.dim();
  Matrix sum = Matrix::Zero(d, d);
  for (const auto& c : problem.clients()) sum += c.base_hessian();
  sum /= static_cast<double>(problem.num_clients());
  sum.diagonal().array() += problem.tilt_gamma();
  return sum;
}

Vector mean_linear(const FederatedProblem& problem) {
  Vector sum = Vector::Zero(problem.dim());
  for (const auto& c : problem.clients()) sum += c.linear();
  return sum / static_cast<double>(problem.num_clients());
}

double estimate_delta(const FederatedProblem& problem, double tol) {
  const std::size_t M = problem.num_clients();
  if (M == 1) return 0.0;
  const Eigen::Index d = problem.dim();
  Matrix hbar = Matrix::Zero(d, d);
  for (const auto& c : problem.clients()) hbar += c.hessian();
  hbar /= static_cast<double>(M);

  Matrix dev_sq = Matrix::Zero(d, d);
  for (const auto& c : problem.clients()) {
    const Matrix e = c.hessian() - hbar;
    dev_sq.noalias() += e * e;
  }
  dev_sq /= static_cast<double>(M);
  dev_sq = 0.5 * (dev_sq + dev_sq.transpose()).eval();

  PowerIterationOptions opts;
  opts.rel_tol = tol;
  const EigenEstimate est = power_iteration(dev_sq, opts);
  return std::sqrt(std::max(0.0, est.value));
}

double sigma_star_sq(const FederatedProblem& problem, const Vector& x_star) {
  double sum = 0.0;
  for (const auto& c : problem.clients()) sum += eval_grad(c, x_star).squaredNorm();
  return sum / static_cast<double>(problem.num_clients());
}

ProblemConstants compute_constants(const FederatedProblem& problem, double tol) {
  ProblemConstants k;
  const Matrix hbar = mean_hessian(problem);

  k.mu = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < problem.num_clients(); ++m) {
    const auto& c = problem.client(m);
    const double lmin = min_eigenvalue(c.hessian());
    require(lmin >= c.mu() * (1.0 - 1e-9) - 1e-12, ErrorKind::invalid_argument,
            "client " + std::to_string(m) + " has lambda_min(H) below its strong-convexity tag");
    k.mu = std::min(k.mu, lmin);
  }
  require(k.mu > 0.0, ErrorKind::no_minimizer, "clients are not strongly convex (mu <= 0)");

  PowerIterationOptions opts;
  opts.rel_tol = tol;
  k.L = power_iteration(hbar, opts).value;
  k.delta = estimate_delta(problem, tol);

  if (problem.regularizer().is_none()) {
    Eigen::LLT<Matrix> llt(hbar);
    require(llt.info() == Eigen::Success, ErrorKind::no_minimizer,
            "averaged Hessian is not positive definite");
    k.x_star = llt.solve(-mean_linear(problem));
    // One step of iterative refinement against the client-summed gradient.
    k.x_star -= llt.solve(full_grad(problem, k.x_star));
    require(k.x_star.allFinite(), ErrorKind::no_minimizer, "linear solve produced non-finite x*");
  } else {
    k.x_star = solve_composite(problem);
  }
  k.sigma_star_sq = sigma_star_sq(problem, k.x_star);
  k.f_star = problem.value(k.x_star);
  return k;
}

Vector solve_composite(const FederatedProblem& problem, double tol, std::size_t max_iters) {
  const Matrix hbar = mean_hessian(problem);
  const double L = max_eigenvalue_dense(hbar);
  const double mu = min_eigenvalue(hbar);
  require(mu > 0.0, ErrorKind::no_minimizer, "composite objective is not strongly convex");
  const double step = 1.0 / L;
  const double sq = std::sqrt(mu / L);
  const double momentum = (1.0 - sq) / (1.0 + sq);
  const Vector cbar = mean_linear(problem);
  const Regularizer& reg = problem.regularizer();

  auto grad = [&](const Vector& x) -> Vector { return hbar * x + cbar; };
  auto prox = [&](const Vector& z) -> Vector {
    switch (reg.kind) {
      case RegularizerKind::none: return z;
      case RegularizerKind::l1: {
        const double t = step * reg.weight;
        return z.unaryExpr([t](double v) {
          return v > t ? v - t : (v < -t ? v + t : 0.0);
        });
      }
      case RegularizerKind::ball: {
        const double n = z.norm();
        return n <= reg.radius ? z : Vector(z * (reg.radius / n));
      }
    }
    return z;
  };

  Vector y = Vector::Zero(problem.dim());
  Vector v = y;
  for (std::size_t it = 0; it < max_iters; ++it) {
    const Vector gv = grad(v);
    const Vector next = prox(v - step * gv);
    // next - v = -step*G; s = G - grad(v) + grad(next) is a subgradient of F at next.
    const Vector s = (v - next) / step - gv + grad(next);
    if (s.norm() / mu <= tol) return next;
    v = next + momentum * (next - y);
    y = next;
  }
  return y;
}

double similarity_ratio(const FederatedProblem& problem, const Vector& x, const Vector& y) {
  const Vector gx = full_grad(problem, x);
  const Vector gy = full_grad(problem, y);
  double sum = 0.0;
  for (const auto& c : problem.clients()) {
    sum += ((eval_grad(c, x) - gx) - (eval_grad(c, y) - gy)).squaredNorm();
  }
  return sum / static_cast<double>(problem.num_clients()) / (x - y).squaredNorm();
}

}  // namespace proxfed
