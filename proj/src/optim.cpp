#include "proxfed/optim.hpp"

#include <algorithm>
#include <cmath>

namespace proxfed {

namespace {

std::size_t ceil_nonneg(double v) {
  if (!(v > 0.0)) return 0;
  return static_cast<std::size_t>(std::ceil(v));
}

void fill(StepInfo* info, std::size_t m, bool coin) {
  if (info) *info = StepInfo{m, coin};
}

}  // namespace

TheoremParams sppm_params(double mu, double sigma_star_sq, double eps, double dist0_sq) {
  require(mu > 0.0, ErrorKind::invalid_argument, "mu must be > 0");
  require(eps > 0.0, ErrorKind::invalid_argument, "eps must be > 0");
  require(sigma_star_sq >= 0.0, ErrorKind::invalid_argument, "sigma*^2 must be >= 0");
  const double cap = kEtaCapFactor / mu;
  TheoremParams t;
  t.eta = sigma_star_sq > 0.0 ? std::min(mu * eps / (2.0 * sigma_star_sq), cap) : cap;
  const double em = t.eta * mu;
  t.p = 1.0;
  t.b = (eps / 4.0) * (em * em) / ((1.0 + em) * (1.0 + em));
  t.tau = em / (1.0 + em);
  t.K = ceil_nonneg((1.0 + em) / em * std::log(4.0 * dist0_sq / eps));
  return t;
}

TheoremParams svrp_params(double mu, double delta, std::size_t M, double eps, double dist0_sq) {
  require(mu > 0.0, ErrorKind::invalid_argument, "mu must be > 0");
  require(eps > 0.0, ErrorKind::invalid_argument, "eps must be > 0");
  require(delta >= 0.0, ErrorKind::invalid_argument, "delta must be >= 0");
  require(M >= 1, ErrorKind::invalid_argument, "M must be >= 1");
  const double cap = kEtaCapFactor / mu;
  TheoremParams t;
  t.eta = delta > 0.0 ? std::min(mu / (2.0 * delta * delta), cap) : cap;
  const double em = t.eta * mu;
  t.p = 1.0 / static_cast<double>(M);
  t.tau = std::min(em / (1.0 + 2.0 * em), t.p / 2.0);
  t.b = eps * t.tau * em * em / (2.0 * std::pow(1.0 + em, 3));
  t.K = ceil_nonneg(std::log(2.0 * dist0_sq * (1.0 + em / t.p) / eps) / t.tau);
  return t;
}

SppmState sppm_init(const Vector& x0) { return SppmState{x0, 0}; }

SvrpState svrp_init(const FederatedProblem& problem, const Vector& x0) {
  require_dim(x0.size(), problem.dim(), "initial point");
  return SvrpState{x0, x0, full_grad(problem, x0), 0};
}

SgdState sgd_init(const Vector& x0) { return SgdState{x0, 0}; }

ScaffoldState scaffold_init(const FederatedProblem& problem, const Vector& x0) {
  require_dim(x0.size(), problem.dim(), "initial point");
  ScaffoldState s;
  s.x = x0;
  s.controls.assign(problem.num_clients(), Vector::Zero(problem.dim()));
  s.control_mean = Vector::Zero(problem.dim());
  return s;
}

SppmState sppm_step(const SppmState& s, const FederatedProblem& problem, ProxEvaluator& prox,
                    Rng& rng, StepInfo* info) {
  const std::size_t m = sample_client(rng, problem.num_clients());
  fill(info, m, false);
  return SppmState{prox.composite(problem, m, s.x), s.k + 1};
}

namespace {

SvrpState svrp_like(const SvrpState& s, const FederatedProblem& problem, const Regularizer* reg,
                    ProxEvaluator& prox, double p, Rng& rng, StepInfo* info) {
  const std::size_t m = sample_client(rng, problem.num_clients());
  const double eta = prox.spec().eta;
  const Vector g = s.full_grad_w - eval_grad(problem.client(m), s.w);
  const Vector z = s.x - eta * g;
  SvrpState next;
  next.x = reg ? prox.composite(problem, m, z, *reg) : prox.smooth(problem, m, z);
  next.k = s.k + 1;
  const bool coin = flip_coin(rng, p);
  if (coin) {
    next.w = next.x;
    next.full_grad_w = full_grad(problem, next.w);
  } else {
    next.w = s.w;
    next.full_grad_w = s.full_grad_w;
  }
  fill(info, m, coin);
  return next;
}

}  // namespace

SvrpState svrp_step(const SvrpState& s, const FederatedProblem& problem, ProxEvaluator& prox,
                    double p, Rng& rng, StepInfo* info) {
  return svrp_like(s, problem, nullptr, prox, p, rng, info);
}

SvrpState svrp_composite_step(const SvrpState& s, const FederatedProblem& problem,
                              const Regularizer& reg, ProxEvaluator& prox, double p, Rng& rng,
                              StepInfo* info) {
  return svrp_like(s, problem, &reg, prox, p, rng, info);
}

SgdState sgd_step(const SgdState& s, const FederatedProblem& problem, double eta, Rng& rng,
                  StepInfo* info) {
  const std::size_t m = sample_client(rng, problem.num_clients());
  fill(info, m, false);
  const Vector z = s.x - eta * eval_grad(problem.client(m), s.x);
  return SgdState{prox_regularizer(problem.regularizer(), eta, z), s.k + 1};
}

SvrpState lsvrg_step(const SvrpState& s, const FederatedProblem& problem, double eta, double p,
                     Rng& rng, StepInfo* info) {
  const std::size_t m = sample_client(rng, problem.num_clients());
  const ClientObjective& client = problem.client(m);
  const Vector g = eval_grad(client, s.x) - eval_grad(client, s.w) + s.full_grad_w;
  SvrpState next;
  next.x = prox_regularizer(problem.regularizer(), eta, s.x - eta * g);
  next.k = s.k + 1;
  const bool coin = flip_coin(rng, p);
  if (coin) {
    next.w = next.x;
    next.full_grad_w = full_grad(problem, next.w);
  } else {
    next.w = s.w;
    next.full_grad_w = s.full_grad_w;
  }
  fill(info, m, coin);
  return next;
}

ScaffoldState scaffold_step(const ScaffoldState& s, const FederatedProblem& problem, double eta,
                            Rng& rng, StepInfo* info) {
  const std::size_t m = sample_client(rng, problem.num_clients());
  fill(info, m, false);
  const Vector g = eval_grad(problem.client(m), s.x);
  ScaffoldState next = s;
  next.x = prox_regularizer(problem.regularizer(), eta,
                            s.x - eta * (g - s.controls[m] + s.control_mean));
  next.control_mean += (g - s.controls[m]) / static_cast<double>(problem.num_clients());
  next.controls[m] = g;
  next.k = s.k + 1;
  return next;
}

double lyapunov(const SvrpState& s, const Vector& x_star, double eta, double mu, double p) {
  return (s.x - x_star).squaredNorm() + (eta * mu / p) * (s.w - x_star).squaredNorm();
}

double recurrence_iterate(double r0, double theta, double c, std::size_t K) {
  double r = r0;
  for (std::size_t k = 0; k < K; ++k) r = (r + c) / (1.0 + theta);
  return r;
}

double recurrence_bound(double r0, double theta, double c, std::size_t K) {
  const double k = static_cast<double>(K);
  return r0 / std::pow(1.0 + theta, k) + std::min(k / (1.0 + theta), 1.0 / theta) * c;
}

}  // namespace proxfed
