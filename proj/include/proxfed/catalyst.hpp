#ifndef PROXFED_CATALYST_HPP
#define PROXFED_CATALYST_HPP

#include <memory>
#include <optional>
#include <vector>

#include "proxfed/optim.hpp"

namespace proxfed {

struct CatalystParams {
  bool accelerated = false;  // delta/mu >= sqrt(M)
  double gamma = 0.0;
  double q = 1.0;
  double rho = 0.5;
  double alpha0 = 1.0;
  double A = 0.0;
  double tau_inner = 0.0;
  std::size_t T_outer = 0;
  std::size_t T_inner = 0;
  double inner_eta = 0.0;  // (mu + gamma) / (2 delta^2), capped
  double inner_p = 1.0;    // 1 / M
  double mu = 0.0;
};

/// Picks gamma = delta/sqrt(M) - mu when delta/mu >= sqrt(M), else 0, and
/// derives the outer and inner budgets. initial_gap is f(x0) - f*.
CatalystParams catalyst_params(double mu, double delta, std::size_t M, double L, double eps,
                               double initial_gap = 1.0);

/// Root in (0, 1] of a^2 + (a_prev^2 - q) a - a_prev^2 = 0.
double alpha_update(double alpha_prev, double q);
/// a^2 - (1 - a) a_prev^2 - q a.
double alpha_residual(double alpha, double alpha_prev, double q);
/// a_prev (1 - a_prev) / (a_prev^2 + a).
double extrapolation_beta(double alpha_prev, double alpha);
Vector extrapolate(const Vector& x, const Vector& x_prev, double alpha_prev, double alpha);

/// One inner SVRP iteration of Catalyzed SVRP per step. An outer step opens
/// by tilting every client towards y_{t-1} and restarting SVRP at x_{t-1}
/// (anchor and full gradient included); it closes after T_inner iterations
/// with the alpha and extrapolation updates. When gamma = 0 there is nothing
/// to restart and the run is plain SVRP.
struct CatalystState {
  Vector x;       // x_t, last completed outer iterate
  Vector x_prev;  // x_{t-1}
  Vector y;       // y_t
  double alpha = 1.0;
  std::size_t t = 0;        // completed outer steps
  std::size_t inner_k = 0;  // inner steps taken in the open outer step
  std::shared_ptr<const FederatedProblem> inner_problem;
  SvrpState inner;
};

struct CatalystStepInfo {
  StepInfo inner;
  bool outer_started = false;  // SVRP was (re)started on a new h_t at this step
  bool outer_completed = false;
};

CatalystState catalyst_init(const Vector& x0, const CatalystParams& params);

CatalystState catalyst_step(const CatalystState& s, const FederatedProblem& problem,
                            const CatalystParams& params, ProxEvaluator& inner_prox, Rng& rng,
                            CatalystStepInfo* info = nullptr);

/// Prox spec of the inner solver: exact, eta = params.inner_eta.
ProxSpec catalyst_inner_prox(const CatalystParams& params);

/// Communication charged for one catalyst_step: 2 for the sampled client,
/// 3M when the coin fires, and at an outer start 3M for the restart sync plus
/// M for broadcasting y_{t-1} when gamma > 0.
std::size_t catalyst_step_cost(const CatalystStepInfo& info, std::size_t M, double gamma,
                               bool charge_restart = true);

struct OuterRecord {
  std::size_t t = 0;
  std::size_t comm_steps = 0;
  double subopt = 0.0;
  double sq_dist = 0.0;
  double alpha = 0.0;
  double eps_t = 0.0;  // (2/9)(f(x0) - f*)(1 - rho)^t, diagnostic only
};

struct CatalystRun {
  CatalystParams params;
  std::vector<OuterRecord> outer;  // outer[0] is x_0
  Vector x_final;
  std::size_t comm_total = 0;
};

/// Runs T_outer outer steps (or outer_override) of Catalyzed SVRP with
/// constants taken from the problem.
CatalystRun catalyzed_svrp_run(const FederatedProblem& problem, double eps, const Vector& x0,
                               std::uint64_t seed,
                               std::optional<std::size_t> outer_override = std::nullopt);

}  // namespace proxfed

#endif  // PROXFED_CATALYST_HPP
