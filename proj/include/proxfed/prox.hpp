#ifndef PROXFED_PROX_HPP
#define PROXFED_PROX_HPP

#include <optional>
#include <vector>

#include "proxfed/problem.hpp"

namespace proxfed {

enum class ProxMethod { exact, gd, agd, composite_pg };

const char* to_string(ProxMethod method);
ProxMethod parse_prox_method(const std::string& name);

/// Which prox oracle to use and how accurately.
/// b is the squared-distance accuracy; b = 0 means "exact" (closed form when
/// the client is quadratic, otherwise the iterative solvers run at 1e-14).
struct ProxSpec {
  ProxMethod method = ProxMethod::exact;
  double b = 0.0;
  std::size_t max_inner_iters = 0;  // 0: use default_max_inner_iters
  double eta = 1.0;
};

struct ProxResult {
  Vector point;
  std::size_t inner_iters = 0;
  bool certified = false;
};

/// Accuracy used when b = 0 is requested from an iterative solver.
inline constexpr double kExactFallbackAccuracy = 1e-14;

/// 10 * ceil(factor * ln(1/b + e)) + 100, where factor is sqrt(kappa_hat)
/// for accelerated solvers and kappa_hat for plain gradient descent, and
/// kappa_hat = (eta L + 1) / (eta mu + 1).
std::size_t default_max_inner_iters(double eta, double mu, double L, double b, bool accelerated);

/// Solves (eta H + I) y = z - eta c.
Vector prox_exact_quadratic(const ClientObjective& client, double eta, const Vector& z);

/// Gradient descent on y -> f(y) + ||y - z||^2 / (2 eta), started at y = z.
/// Exits once ||grad||^2 <= b (mu + 1/eta)^2, which certifies ||y - prox||^2 <= b.
ProxResult prox_gd(const ClientObjective& client, double eta, const Vector& z, double b,
                   double mu, double L, std::size_t max_inner_iters = 0);

/// Nesterov's method on the same local objective with the same certificate.
ProxResult prox_agd(const ClientObjective& client, double eta, const Vector& z, double b,
                    double mu, double L, std::size_t max_inner_iters = 0);

/// prox of eta R: identity, soft threshold at eta*w, or projection onto the ball.
Vector prox_regularizer(const Regularizer& reg, double eta, const Vector& z);

/// Accelerated proximal gradient on f(y) + R(y) + ||y - z||^2 / (2 eta).
/// Certificate: the subgradient residual s in dPhi(y+) satisfies
/// ||s||^2 <= b (mu + 1/eta)^2.
ProxResult prox_composite(const ClientObjective& client, const Regularizer& reg, double eta,
                          const Vector& z, double b, double mu, double L,
                          std::size_t max_inner_iters = 0);

/// Per-run prox oracle. Caches factorizations of (eta H_m + I) and per-client
/// spectra, keyed by client index and checked against the client's curvature.
/// Not thread safe; each run owns one.
class ProxEvaluator {
 public:
  explicit ProxEvaluator(ProxSpec spec);

  const ProxSpec& spec() const noexcept { return spec_; }

  /// prox_{eta f_m}(z) with the configured method.
  Vector smooth(const FederatedProblem& problem, std::size_t m, const Vector& z);
  /// prox_{eta f_m + eta R}(z); delegates to smooth() when R = none.
  Vector composite(const FederatedProblem& problem, std::size_t m, const Vector& z,
                   const Regularizer& reg);
  Vector composite(const FederatedProblem& problem, std::size_t m, const Vector& z) {
    return composite(problem, m, z, problem.regularizer());
  }

  std::size_t total_inner_iters() const noexcept { return inner_iters_; }
  std::size_t uncertified_calls() const noexcept { return uncertified_; }

 private:
  struct ClientCache {
    const void* curvature = nullptr;
    double gamma = 0.0;
    std::optional<Eigen::LLT<Matrix>> llt;
    bool has_spectrum = false;
    double mu = 0.0;
    double L = 0.0;
  };

  ClientCache& entry(const FederatedProblem& problem, std::size_t m);
  Vector exact(const FederatedProblem& problem, std::size_t m, const Vector& z);
  void spectrum(const ClientObjective& client, ClientCache& c);
  Vector record(ProxResult r);

  ProxSpec spec_;
  std::vector<ClientCache> cache_;
  std::size_t inner_iters_ = 0;
  std::size_t uncertified_ = 0;
};

}  // namespace proxfed

#endif  // PROXFED_PROX_HPP
