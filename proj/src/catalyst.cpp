#include "proxfed/catalyst.hpp"

#include <algorithm>
#include <cmath>

namespace proxfed {

CatalystParams catalyst_params(double mu, double delta, std::size_t M, double L, double eps,
                               double initial_gap) {
  require(mu > 0.0, ErrorKind::invalid_argument, "mu must be > 0");
  require(delta > 0.0, ErrorKind::invalid_argument, "catalyst needs delta > 0");
  require(M >= 1, ErrorKind::invalid_argument, "M must be >= 1");
  require(eps > 0.0, ErrorKind::invalid_argument, "eps must be > 0");
  require(initial_gap >= 0.0, ErrorKind::invalid_argument, "initial gap must be >= 0");

  CatalystParams c;
  c.mu = mu;
  const double sqrt_m = std::sqrt(static_cast<double>(M));
  c.accelerated = delta / mu >= sqrt_m;
  c.gamma = c.accelerated ? std::max(0.0, delta / sqrt_m - mu) : 0.0;
  const double mg = mu + c.gamma;
  c.q = mu / mg;
  c.rho = std::sqrt(c.q) / 2.0;
  c.alpha0 = std::sqrt(c.q);

  const double ratio = delta * delta / (mg * mg);
  c.A = (L + c.gamma) / mg * (1.0 + mg * mg * static_cast<double>(M) / (delta * delta));
  c.tau_inner = 0.5 * std::min(1.0 / (ratio + 1.0), 1.0 / static_cast<double>(M));

  const double one_minus_rho = 1.0 - c.rho;
  const double gap_term = std::sqrt(c.q) - c.rho;
  const double inner_log = std::log(
      c.A * (2.0 / one_minus_rho +
             2592.0 * c.gamma / (mu * one_minus_rho * one_minus_rho * gap_term * gap_term)));
  c.T_inner = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(inner_log / c.tau_inner)));

  const double outer = 2.0 * std::sqrt(mg / mu) * std::log(32.0 * initial_gap * mg / (mu * eps));
  c.T_outer = outer > 1.0 ? static_cast<std::size_t>(std::ceil(outer)) : 1;

  c.inner_eta = std::min(mg / (2.0 * delta * delta), kEtaCapFactor / mg);
  c.inner_p = 1.0 / static_cast<double>(M);
  return c;
}

double alpha_update(double alpha_prev, double q) {
  const double a2 = alpha_prev * alpha_prev;
  const double b = a2 - q;
  const double disc = std::sqrt(b * b + 4.0 * a2);
  // Pick the cancellation-free form of the positive root.
  return b >= 0.0 ? 2.0 * a2 / (b + disc) : (disc - b) / 2.0;
}

double alpha_residual(double alpha, double alpha_prev, double q) {
  return alpha * alpha - (1.0 - alpha) * alpha_prev * alpha_prev - q * alpha;
}

double extrapolation_beta(double alpha_prev, double alpha) {
  return alpha_prev * (1.0 - alpha_prev) / (alpha_prev * alpha_prev + alpha);
}

Vector extrapolate(const Vector& x, const Vector& x_prev, double alpha_prev, double alpha) {
  return x + extrapolation_beta(alpha_prev, alpha) * (x - x_prev);
}

CatalystState catalyst_init(const Vector& x0, const CatalystParams& params) {
  CatalystState s;
  s.x = x0;
  s.x_prev = x0;
  s.y = x0;
  s.alpha = params.alpha0;
  return s;
}

ProxSpec catalyst_inner_prox(const CatalystParams& params) {
  ProxSpec spec;
  spec.method = ProxMethod::exact;
  spec.b = 0.0;
  spec.eta = params.inner_eta;
  return spec;
}

CatalystState catalyst_step(const CatalystState& s, const FederatedProblem& problem,
                            const CatalystParams& params, ProxEvaluator& inner_prox, Rng& rng,
                            CatalystStepInfo* info) {
  CatalystState next = s;
  CatalystStepInfo local;
  // h_t(x) = f(x) + (gamma/2)||x - y_{t-1}||^2. With gamma = 0 every h_t is f
  // and x_{t-1} is the current inner iterate, so SVRP simply keeps running.
  if (next.inner_k == 0 && (params.gamma > 0.0 || s.t == 0)) {
    next.inner_problem =
        params.gamma > 0.0
            ? std::make_shared<const FederatedProblem>(problem.tilted(params.gamma, s.y))
            : std::make_shared<const FederatedProblem>(problem);
    next.inner = svrp_init(*next.inner_problem, s.x);
    local.outer_started = true;
  }
  next.inner = svrp_step(next.inner, *next.inner_problem, inner_prox, params.inner_p, rng,
                         &local.inner);
  ++next.inner_k;
  if (next.inner_k == params.T_inner) {
    const double alpha = alpha_update(s.alpha, params.q);
    next.x_prev = s.x;
    next.x = next.inner.x;
    next.y = extrapolate(next.x, next.x_prev, s.alpha, alpha);
    next.alpha = alpha;
    ++next.t;
    next.inner_k = 0;
    local.outer_completed = true;
  }
  if (info) *info = local;
  return next;
}

std::size_t catalyst_step_cost(const CatalystStepInfo& info, std::size_t M, double gamma,
                               bool charge_restart) {
  std::size_t cost = 2;
  if (info.inner.coin) cost += 3 * M;
  if (info.outer_started && charge_restart) cost += 3 * M + (gamma > 0.0 ? M : 0);
  return cost;
}

CatalystRun catalyzed_svrp_run(const FederatedProblem& problem, double eps, const Vector& x0,
                               std::uint64_t seed, std::optional<std::size_t> outer_override) {
  const ProblemConstants& k = problem.constants();
  const double gap0 = problem.value(x0) - k.f_star;
  CatalystRun run;
  run.params = catalyst_params(k.mu, k.delta, problem.num_clients(), k.L, eps, gap0);
  const std::size_t T = outer_override.value_or(run.params.T_outer);
  const std::size_t M = problem.num_clients();

  ProxEvaluator prox(catalyst_inner_prox(run.params));
  Rng rng(seed);
  CatalystState s = catalyst_init(x0, run.params);
  run.outer.push_back(OuterRecord{0, 0, gap0, (x0 - k.x_star).squaredNorm(), s.alpha,
                                  2.0 / 9.0 * gap0});
  while (s.t < T) {
    CatalystStepInfo info;
    s = catalyst_step(s, problem, run.params, prox, rng, &info);
    run.comm_total += catalyst_step_cost(info, M, run.params.gamma);
    if (info.outer_completed) {
      run.outer.push_back(OuterRecord{
          s.t, run.comm_total, problem.value(s.x) - k.f_star, (s.x - k.x_star).squaredNorm(),
          s.alpha,
          2.0 / 9.0 * gap0 * std::pow(1.0 - run.params.rho, static_cast<double>(s.t))});
    }
  }
  run.x_final = s.x;
  return run;
}

}  // namespace proxfed
