#ifndef PROXFED_OPTIM_HPP
#define PROXFED_OPTIM_HPP

#include <vector>

#include "proxfed/problem.hpp"
#include "proxfed/prox.hpp"

namespace proxfed {

/// Default stepsizes are capped at kEtaCapFactor / mu.
inline constexpr double kEtaCapFactor = 1e6;

struct TheoremParams {
  double eta = 0.0;
  double p = 1.0;
  double b = 0.0;
  double tau = 0.0;
  std::size_t K = 0;
};

/// eta = mu eps / (2 sigma*^2) (capped), b = (eps/4)(eta mu)^2/(1+eta mu)^2,
/// K = ceil((1+eta mu)/(eta mu) * ln(4 dist0_sq / eps)).
TheoremParams sppm_params(double mu, double sigma_star_sq, double eps, double dist0_sq);

/// eta = mu / (2 delta^2) (capped), p = 1/M, tau = min{eta mu/(1+2 eta mu), p/2},
/// b = eps tau (eta mu)^2 / (2 (1+eta mu)^3),
/// K = ceil((1/tau) ln(2 dist0_sq (1 + eta mu / p) / eps)).
TheoremParams svrp_params(double mu, double delta, std::size_t M, double eps,
                          double dist0_sq = 1.0);

/// Which client was drawn and whether the anchor coin fired.
struct StepInfo {
  std::size_t client = 0;
  bool coin = false;
};

struct SppmState {
  Vector x;
  std::size_t k = 0;
};

/// Shared by SVRP, composite SVRP and loopless SVRG.
struct SvrpState {
  Vector x;
  Vector w;
  Vector full_grad_w;  // full_grad(problem, w)
  std::size_t k = 0;
};

struct SgdState {
  Vector x;
  std::size_t k = 0;
};

struct ScaffoldState {
  Vector x;
  std::vector<Vector> controls;
  Vector control_mean;
  std::size_t k = 0;
};

SppmState sppm_init(const Vector& x0);
SvrpState svrp_init(const FederatedProblem& problem, const Vector& x0);
SgdState sgd_init(const Vector& x0);
ScaffoldState scaffold_init(const FederatedProblem& problem, const Vector& x0);

/// x+ = prox_{eta f_m}(x), m uniform. Uses the composite prox when the
/// problem carries a regularizer.
SppmState sppm_step(const SppmState& s, const FederatedProblem& problem, ProxEvaluator& prox,
                    Rng& rng, StepInfo* info = nullptr);

/// g = grad f(w) - grad f_m(w); x+ = prox_{eta f_m}(x - eta g);
/// with probability p: w+ = x+ and the cached full gradient is refreshed.
SvrpState svrp_step(const SvrpState& s, const FederatedProblem& problem, ProxEvaluator& prox,
                    double p, Rng& rng, StepInfo* info = nullptr);

/// As svrp_step with the prox of eta f_m + eta R.
SvrpState svrp_composite_step(const SvrpState& s, const FederatedProblem& problem,
                              const Regularizer& reg, ProxEvaluator& prox, double p, Rng& rng,
                              StepInfo* info = nullptr);

/// x+ = prox_{eta R}(x - eta grad f_m(x)).
SgdState sgd_step(const SgdState& s, const FederatedProblem& problem, double eta, Rng& rng,
                  StepInfo* info = nullptr);

/// x+ = prox_{eta R}(x - eta [grad f_m(x) - grad f_m(w) + grad f(w)]);
/// anchor update as in svrp_step.
SvrpState lsvrg_step(const SvrpState& s, const FederatedProblem& problem, double eta, double p,
                     Rng& rng, StepInfo* info = nullptr);

/// x+ = prox_{eta R}(x - eta [grad f_m(x) - c_m + cbar]); then c_m = grad f_m(x).
ScaffoldState scaffold_step(const ScaffoldState& s, const FederatedProblem& problem, double eta,
                            Rng& rng, StepInfo* info = nullptr);

/// ||x - x*||^2 + (eta mu / p) ||w - x*||^2.
double lyapunov(const SvrpState& s, const Vector& x_star, double eta, double mu, double p);

/// Iterates r <- (r + c) / (1 + theta) K times.
double recurrence_iterate(double r0, double theta, double c, std::size_t K);
/// r0 / (1+theta)^K + min{K / (1+theta), 1/theta} c.
double recurrence_bound(double r0, double theta, double c, std::size_t K);

}  // namespace proxfed

#endif  // PROXFED_OPTIM_HPP
