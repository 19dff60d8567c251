#include "proxfed/prox.hpp"

#include <cmath>
#include <numbers>

namespace proxfed {

const char* to_string(ProxMethod method) {
  switch (method) {
    case ProxMethod::exact: return "exact";
    case ProxMethod::gd: return "gd";
    case ProxMethod::agd: return "agd";
    case ProxMethod::composite_pg: return "composite-pg";
  }
  return "exact";
}

ProxMethod parse_prox_method(const std::string& name) {
  if (name == "exact") return ProxMethod::exact;
  if (name == "gd") return ProxMethod::gd;
  if (name == "agd") return ProxMethod::agd;
  if (name == "composite-pg") return ProxMethod::composite_pg;
  throw Error(ErrorKind::invalid_override,
              "unknown prox method '" + name + "' (expected exact, gd, agd, composite-pg)");
}

namespace {

void check_inputs(double eta, const Vector& z, Eigen::Index d) {
  require(eta > 0.0 && std::isfinite(eta), ErrorKind::invalid_argument, "prox stepsize must be > 0");
  require_dim(z.size(), d, "prox argument");
  require(z.allFinite(), ErrorKind::invalid_argument, "prox argument has non-finite entries");
}

double effective_b(double b) {
  require(b >= 0.0, ErrorKind::invalid_argument, "prox accuracy b must be >= 0");
  return b > 0.0 ? b : kExactFallbackAccuracy;
}

// Gradient of y -> f(y) + ||y - z||^2 / (2 eta).
Vector local_grad(const ClientObjective& client, double eta, const Vector& z, const Vector& y) {
  return eval_grad(client, y) + (y - z) / eta;
}

}  // namespace

std::size_t default_max_inner_iters(double eta, double mu, double L, double b, bool accelerated) {
  const double kappa_hat = (eta * L + 1.0) / (eta * mu + 1.0);
  const double factor = accelerated ? std::sqrt(kappa_hat) : kappa_hat;
  const double n = std::ceil(factor * std::log(1.0 / b + std::numbers::e));
  return 10 * static_cast<std::size_t>(n) + 100;
}

Vector prox_exact_quadratic(const ClientObjective& client, double eta, const Vector& z) {
  check_inputs(eta, z, client.dim());
  Matrix a = eta * client.hessian();
  a.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(a);
  require(llt.info() == Eigen::Success, ErrorKind::no_minimizer,
          "prox system is not positive definite");
  return llt.solve(z - eta * client.linear());
}

ProxResult prox_gd(const ClientObjective& client, double eta, const Vector& z, double b,
                   double mu, double L, std::size_t max_inner_iters) {
  check_inputs(eta, z, client.dim());
  b = effective_b(b);
  const double mu_hat = mu + 1.0 / eta;
  const double beta = 1.0 / (L + 1.0 / eta);
  const double threshold = b * mu_hat * mu_hat;
  if (max_inner_iters == 0) max_inner_iters = default_max_inner_iters(eta, mu, L, b, false);

  ProxResult r;
  r.point = z;
  for (;;) {
    const Vector g = local_grad(client, eta, z, r.point);
    if (g.squaredNorm() <= threshold) {
      r.certified = true;
      return r;
    }
    if (r.inner_iters == max_inner_iters) return r;
    r.point -= beta * g;
    ++r.inner_iters;
  }
}

ProxResult prox_agd(const ClientObjective& client, double eta, const Vector& z, double b,
                    double mu, double L, std::size_t max_inner_iters) {
  check_inputs(eta, z, client.dim());
  b = effective_b(b);
  const double mu_hat = mu + 1.0 / eta;
  const double L_hat = L + 1.0 / eta;
  const double beta = 1.0 / L_hat;
  const double sq = std::sqrt(L_hat / mu_hat);
  const double momentum = (sq - 1.0) / (sq + 1.0);
  const double threshold = b * mu_hat * mu_hat;
  if (max_inner_iters == 0) max_inner_iters = default_max_inner_iters(eta, mu, L, b, true);

  ProxResult r;
  Vector v = z;
  Vector y = z;
  for (;;) {
    const Vector g = local_grad(client, eta, z, v);
    if (g.squaredNorm() <= threshold) {
      r.point = v;
      r.certified = true;
      return r;
    }
    if (r.inner_iters == max_inner_iters) {
      r.point = v;
      return r;
    }
    Vector next = v - beta * g;
    v = next + momentum * (next - y);
    y = std::move(next);
    ++r.inner_iters;
  }
}

Vector prox_regularizer(const Regularizer& reg, double eta, const Vector& z) {
  switch (reg.kind) {
    case RegularizerKind::none: return z;
    case RegularizerKind::l1: {
      const double t = eta * reg.weight;
      return z.unaryExpr([t](double v) { return v > t ? v - t : (v < -t ? v + t : 0.0); });
    }
    case RegularizerKind::ball: {
      const double n = z.norm();
      if (n <= reg.radius) return z;
      return z * (reg.radius / n);
    }
  }
  return z;
}

ProxResult prox_composite(const ClientObjective& client, const Regularizer& reg, double eta,
                          const Vector& z, double b, double mu, double L,
                          std::size_t max_inner_iters) {
  check_inputs(eta, z, client.dim());
  b = effective_b(b);
  const double mu_hat = mu + 1.0 / eta;
  const double L_hat = L + 1.0 / eta;
  const double beta = 1.0 / L_hat;
  const double sq = std::sqrt(L_hat / mu_hat);
  const double momentum = (sq - 1.0) / (sq + 1.0);
  const double threshold = b * mu_hat * mu_hat;
  if (max_inner_iters == 0) max_inner_iters = default_max_inner_iters(eta, mu, L, b, true);

  ProxResult r;
  Vector v = prox_regularizer(reg, beta, z);
  Vector y = v;
  for (;;) {
    const Vector gv = local_grad(client, eta, z, v);
    Vector next = prox_regularizer(reg, beta, v - beta * gv);
    ++r.inner_iters;
    // (v - next)/beta - grad(v) lies in dR(next); adding grad(next) gives a
    // subgradient of the whole local objective at next.
    const Vector s = (v - next) / beta - gv + local_grad(client, eta, z, next);
    if (s.squaredNorm() <= threshold) {
      r.point = std::move(next);
      r.certified = true;
      return r;
    }
    if (r.inner_iters >= max_inner_iters) {
      r.point = std::move(next);
      return r;
    }
    v = next + momentum * (next - y);
    y = std::move(next);
  }
}

ProxEvaluator::ProxEvaluator(ProxSpec spec) : spec_(spec) {
  require(spec_.eta > 0.0 && std::isfinite(spec_.eta), ErrorKind::invalid_argument,
          "prox stepsize must be > 0");
  require(spec_.b >= 0.0, ErrorKind::invalid_argument, "prox accuracy b must be >= 0");
}

ProxEvaluator::ClientCache& ProxEvaluator::entry(const FederatedProblem& problem, std::size_t m) {
  if (cache_.size() != problem.num_clients()) {
    cache_.clear();
    cache_.resize(problem.num_clients());
  }
  const ClientObjective& client = problem.client(m);
  ClientCache& c = cache_[m];
  if (c.curvature != client.curvature_id() || c.gamma != client.tilt_gamma()) {
    c = ClientCache{};
    c.curvature = client.curvature_id();
    c.gamma = client.tilt_gamma();
  }
  return c;
}

Vector ProxEvaluator::exact(const FederatedProblem& problem, std::size_t m, const Vector& z) {
  const ClientObjective& client = problem.client(m);
  check_inputs(spec_.eta, z, client.dim());
  ClientCache& c = entry(problem, m);
  if (!c.llt) {
    Matrix a = spec_.eta * client.hessian();
    a.diagonal().array() += 1.0;
    c.llt.emplace(a);
    require(c.llt->info() == Eigen::Success, ErrorKind::no_minimizer,
            "prox system is not positive definite");
  }
  return c.llt->solve(z - spec_.eta * client.linear());
}

void ProxEvaluator::spectrum(const ClientObjective& client, ClientCache& c) {
  if (c.has_spectrum) return;
  Eigen::SelfAdjointEigenSolver<Matrix> es(client.hessian(), Eigen::EigenvaluesOnly);
  c.mu = std::max(es.eigenvalues().minCoeff(), client.mu());
  c.L = es.eigenvalues().maxCoeff();
  c.has_spectrum = true;
}

Vector ProxEvaluator::record(ProxResult r) {
  inner_iters_ += r.inner_iters;
  if (!r.certified) ++uncertified_;
  return std::move(r.point);
}

Vector ProxEvaluator::smooth(const FederatedProblem& problem, std::size_t m, const Vector& z) {
  if (spec_.method == ProxMethod::exact || spec_.b == 0.0) return exact(problem, m, z);
  const ClientObjective& client = problem.client(m);
  ClientCache& c = entry(problem, m);
  spectrum(client, c);
  switch (spec_.method) {
    case ProxMethod::gd:
      return record(prox_gd(client, spec_.eta, z, spec_.b, c.mu, c.L, spec_.max_inner_iters));
    case ProxMethod::agd:
      return record(prox_agd(client, spec_.eta, z, spec_.b, c.mu, c.L, spec_.max_inner_iters));
    default:
      return record(prox_composite(client, Regularizer::none(), spec_.eta, z, spec_.b, c.mu, c.L,
                                   spec_.max_inner_iters));
  }
}

Vector ProxEvaluator::composite(const FederatedProblem& problem, std::size_t m, const Vector& z,
                                const Regularizer& reg) {
  if (reg.is_none()) return smooth(problem, m, z);
  const ClientObjective& client = problem.client(m);
  ClientCache& c = entry(problem, m);
  spectrum(client, c);
  return record(prox_composite(client, reg, spec_.eta, z, spec_.b, c.mu, c.L,
                               spec_.max_inner_iters));
}

}  // namespace proxfed
