#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "proxfed/optim.hpp"

using namespace proxfed;

namespace {

ProxEvaluator exact_prox(double eta) { return ProxEvaluator(ProxSpec{ProxMethod::exact, 0.0, 0, eta}); }

FederatedProblem scalar_pair() {
  // f_1 = (x-1)^2, f_2 = (x+1)^2
  std::vector<ClientObjective> c = {
      fx::quad(Matrix::Constant(1, 1, 2.0), Vector::Constant(1, -2.0), 1.0),
      fx::quad(Matrix::Constant(1, 1, 2.0), Vector::Constant(1, 2.0), 1.0)};
  return FederatedProblem(c);
}

}  // namespace

TEST_CASE("sppm_params by substitution") {
  const TheoremParams t = sppm_params(1.0, 2.0, 1.0, 1.0);
  CHECK(t.eta == doctest::Approx(0.25));
  CHECK(t.b == doctest::Approx(0.01));
  CHECK(t.K == 7);

  // K = (1 + 2 sigma^2 / (mu^2 eps)) ln(4 d0 / eps), written independently
  auto oracle = [](double mu, double s2, double eps, double d0) {
    return static_cast<std::size_t>(std::ceil((1 + 2 * s2 / (mu * mu * eps)) * std::log(4 * d0 / eps)));
  };
  const TheoremParams t2 = sppm_params(1.0, 2.0, 0.01, 1.0);
  CHECK(t2.K == oracle(1.0, 2.0, 0.01, 1.0));
  CHECK(t2.K == 2403);
  // K grows like (1/eps) log(1/eps), not like 1/eps alone
  CHECK(static_cast<double>(t2.K) / t.K == doctest::Approx(2403.0 / 7.0));
  for (double eps : {1e-1, 1e-3, 1e-5}) {
    for (double s2 : {0.5, 3.0, 40.0}) CHECK(sppm_params(2.0, s2, eps, 5.0).K == oracle(2.0, s2, eps, 5.0));
  }

  const TheoremParams z = sppm_params(1.0, 0.0, 1e-6, 1.0);
  CHECK(z.eta == kEtaCapFactor);
  CHECK(z.K >= 1);
  CHECK(z.K < 100);
  CHECK(z.b > 0.0);
}

TEST_CASE("svrp_params by substitution") {
  const TheoremParams t = svrp_params(1.0, 2.0, 10, 1e-3);
  CHECK(t.eta == doctest::Approx(0.125));
  CHECK(t.tau == doctest::Approx(0.05));
  CHECK(t.p == doctest::Approx(0.1));
  const double em = 0.125;
  CHECK(t.b == doctest::Approx(1e-3 * 0.05 * em * em / (2 * std::pow(1 + em, 3))));

  // K = ceil(2 max{delta^2/mu^2 + 1, M} ln(2 (1 + mu^2 M / (2 delta^2)) / eps))
  const double mu = 1, delta = 10, eps = 1e-6;
  const std::size_t M = 5;
  const double oracle =
      std::ceil(2 * std::max(delta * delta / (mu * mu) + 1, double(M)) *
                std::log(2 * (1 + mu * mu * M / (2 * delta * delta)) / eps));
  CHECK(static_cast<double>(svrp_params(mu, delta, M, eps).K) == oracle);
  CHECK(svrp_params(mu, delta, M, eps).K == 2936);

  // M-dominated regime
  const TheoremParams wide = svrp_params(1.0, 1.0, 100, 1e-4);
  CHECK(wide.tau == doctest::Approx(0.005));

  const TheoremParams d0 = svrp_params(1.0, 0.0, 4, 1e-6);
  CHECK(d0.eta == kEtaCapFactor);
  CHECK(d0.tau == doctest::Approx(0.125));
}

TEST_CASE("SPPM contracts deterministically on interpolation problems") {
  const Vector xs = Vector::LinSpaced(6, -2, 3);
  const auto p = fx::interpolation_problem(8, 6, 0.5, 20.0, xs, 1);
  const double mu = p.constants().mu;
  // linear-solve roundoff once the iterate has reached x* to machine precision
  const double floor = 1e-13 * (1 + xs.norm());
  for (double eta : {0.01, 0.3, 5.0}) {
    auto prox = exact_prox(eta);
    Rng rng(5);
    SppmState s = sppm_init(Vector::Zero(6));
    for (int k = 0; k < 300; ++k) {
      const double before = (s.x - xs).norm();
      s = sppm_step(s, p, prox, rng);
      CHECK((s.x - xs).norm() <= before / (1 + eta * mu) * (1 + 1e-12) + floor);
    }
  }
}

TEST_CASE("SPPM with one isotropic client contracts at exactly 1/(1+eta mu)") {
  const double mu = 2.0, eta = 0.7;
  const Vector xs = Vector::Constant(3, 1.5);
  std::vector<ClientObjective> c = {fx::quad(mu * Matrix::Identity(3, 3), -mu * xs)};
  const FederatedProblem p(c);
  auto prox = exact_prox(eta);
  Rng rng(1);
  SppmState s = sppm_init(Vector::Zero(3));
  double r = xs.norm();
  for (int k = 0; k < 20; ++k) {
    s = sppm_step(s, p, prox, rng);
    r /= 1 + eta * mu;
    CHECK((s.x - xs).norm() == doctest::Approx(r).epsilon(1e-12));
  }
}

TEST_CASE("SPPM neighborhood bound in expectation") {
  const auto p = fx::random_problem(4, 3, 1.0, 4.0, 12);
  const auto& k = p.constants();
  const double eta = 0.2;
  const std::size_t K = 60;
  const Vector x0 = Vector::Constant(3, 2.0);
  double mean = 0;
  const int seeds = 500;
  for (int seed = 0; seed < seeds; ++seed) {
    auto prox = exact_prox(eta);
    Rng rng(seed);
    SppmState s = sppm_init(x0);
    for (std::size_t i = 0; i < K; ++i) s = sppm_step(s, p, prox, rng);
    mean += (s.x - k.x_star).squaredNorm() / seeds;
  }
  const double bound = std::pow(1 / (1 + eta * k.mu), double(K)) * (x0 - k.x_star).squaredNorm() +
                       eta * k.sigma_star_sq / k.mu;
  CHECK(mean <= 1.2 * bound);
}

TEST_CASE("SPPM on the two-client pair is reproducible and converges") {
  const auto p = fx::example_pair(1.0);
  auto run = [&] {
    auto prox = exact_prox(1.0);
    Rng rng(42);
    SppmState s = sppm_init(Vector::Constant(1, 1.0));
    std::vector<double> xs;
    for (int k = 0; k < 30; ++k) {
      s = sppm_step(s, p, prox, rng);
      xs.push_back(s.x(0));
    }
    return xs;
  };
  const auto a = run(), b = run();
  CHECK(a == b);
  CHECK(std::abs(a.back()) < 1e-12);
}

TEST_CASE("SVRP fixed point, single-client reduction, unbiasedness") {
  const auto p = fx::random_problem(5, 4, 1.0, 10.0, 3);
  const auto& k = p.constants();
  auto prox = exact_prox(0.05);
  Rng rng(9);
  SvrpState s = svrp_init(p, k.x_star);
  for (int i = 0; i < 20; ++i) {
    s = svrp_step(s, p, prox, 0.3, rng);
    CHECK((s.x - k.x_star).norm() <= 1e-12 * std::max(1.0, k.x_star.norm()));
  }

  // E_m[g + grad f_m(x*)] = 0 at any anchor
  const Vector w = Vector::LinSpaced(4, -3, 1);
  const Vector fw = full_grad(p, w);
  Vector acc = Vector::Zero(4);
  for (std::size_t m = 0; m < 5; ++m) {
    acc += fw - eval_grad(p.client(m), w) + eval_grad(p.client(m), k.x_star);
  }
  CHECK((acc / 5).norm() <= 1e-10 * fw.norm());

  const auto single = fx::random_problem(1, 4, 1.0, 10.0, 4);
  auto pa = exact_prox(0.3), pb = exact_prox(0.3);
  Rng ra(1), rb(1);
  SppmState a = sppm_init(Vector::Ones(4));
  SvrpState b = svrp_init(single, Vector::Ones(4));
  for (int i = 0; i < 25; ++i) {
    a = sppm_step(a, single, pa, ra);
    b = svrp_step(b, single, pb, 0.5, rb);
    CHECK((a.x - b.x).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("SVRP anchor and cached gradient move together") {
  const auto p = fx::random_problem(4, 3, 1.0, 5.0, 5);
  auto prox = exact_prox(0.1);
  Rng rng(2);
  SvrpState s = svrp_init(p, Vector::Ones(3));
  int fired = 0;
  for (int i = 0; i < 200; ++i) {
    StepInfo info;
    const SvrpState next = svrp_step(s, p, prox, 0.25, rng, &info);
    CHECK(info.client < 4);
    if (info.coin) {
      ++fired;
      CHECK(next.w == next.x);
    } else {
      CHECK(next.w == s.w);
    }
    CHECK((next.full_grad_w - full_grad(p, next.w)).norm() == 0.0);
    s = next;
  }
  CHECK(fired > 20);
  CHECK(fired < 80);
}

TEST_CASE("SVRP Lyapunov descent in expectation") {
  const auto p = fx::random_problem(6, 5, 1.0, 8.0, 6);
  const auto& k = p.constants();
  const TheoremParams t = svrp_params(k.mu, k.delta, 6, 1e-6);
  const int seeds = 500, steps = 10;
  std::vector<double> ratios(steps, 0.0), sq(steps, 0.0);
  for (int seed = 0; seed < seeds; ++seed) {
    auto prox = exact_prox(t.eta);
    Rng rng(seed);
    SvrpState s = svrp_init(p, Vector::Constant(5, 3.0));
    for (int i = 0; i < steps; ++i) {
      const double v0 = lyapunov(s, k.x_star, t.eta, k.mu, t.p);
      s = svrp_step(s, p, prox, t.p, rng);
      const double r = lyapunov(s, k.x_star, t.eta, k.mu, t.p) / v0;
      ratios[i] += r;
      sq[i] += r * r;
    }
  }
  for (int i = 0; i < steps; ++i) {
    const double mean = ratios[i] / seeds;
    const double se = std::sqrt(std::max(0.0, sq[i] / seeds - mean * mean) / seeds);
    CHECK(mean <= (1 - t.tau) + 3 * se);
  }
}

TEST_CASE("Lyapunov function basics") {
  const Vector xs = Vector::Constant(2, 1.0);
  SvrpState at{xs, xs, Vector::Zero(2), 0};
  CHECK(lyapunov(at, xs, 0.1, 1.0, 0.5) == 0.0);
  const Vector x0 = Vector::Constant(2, 3.0);
  SvrpState init{x0, x0, Vector::Zero(2), 0};
  CHECK(lyapunov(init, xs, 0.1, 1.0, 0.5) == doctest::Approx((1 + 0.2) * 8.0));
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    SvrpState s{fx::gaussian(2, rng), fx::gaussian(2, rng), Vector::Zero(2), 0};
    CHECK(lyapunov(s, xs, 0.3, 2.0, 0.1) >= (s.x - xs).squaredNorm());
  }
}

TEST_CASE("composite SVRP with no regularizer matches SVRP") {
  const auto p = fx::random_problem(4, 3, 1.0, 5.0, 7);
  auto pa = exact_prox(0.1), pb = exact_prox(0.1);
  Rng ra(3), rb(3);
  SvrpState a = svrp_init(p, Vector::Ones(3)), b = a;
  for (int i = 0; i < 50; ++i) {
    a = svrp_step(a, p, pa, 0.25, ra);
    b = svrp_composite_step(b, p, Regularizer::none(), pb, 0.25, rb);
    CHECK(a.x == b.x);
    CHECK(a.w == b.w);
  }
}

TEST_CASE("SGD hand simulation and degenerate stepsize") {
  std::vector<ClientObjective> c = {fx::quad(Matrix::Constant(1, 1, 2.0), Vector::Constant(1, -2.0), 1.0)};
  const FederatedProblem p(c);
  Rng rng(0);
  SgdState s = sgd_init(Vector::Zero(1));
  const double want[] = {0.5, 0.75, 0.875};
  for (double w : want) {
    s = sgd_step(s, p, 0.25, rng);
    CHECK(s.x(0) == doctest::Approx(w).epsilon(1e-15));
  }
  const auto rp = fx::random_problem(3, 4, 1.0, 3.0, 1);
  SgdState z = sgd_init(Vector::Ones(4));
  CHECK(sgd_step(z, rp, 0.0, rng).x == Vector::Ones(4));

  // M = 1, eta = 1/L: contraction by 1 - mu/L
  const auto one = fx::random_problem(1, 4, 1.0, 4.0, 2);
  const auto& k = one.constants();
  SgdState g = sgd_init(Vector::Constant(4, 5.0));
  for (int i = 0; i < 10; ++i) {
    const double before = (g.x - k.x_star).norm();
    g = sgd_step(g, one, 1.0 / k.L, rng);
    CHECK((g.x - k.x_star).norm() <= (1 - k.mu / k.L) * before * (1 + 1e-12));
  }
}

TEST_CASE("L-SVRG reductions") {
  const auto one = fx::random_problem(1, 4, 1.0, 4.0, 2);
  Rng rng(4);
  SvrpState s = svrp_init(one, Vector::Constant(4, 2.0));
  Vector x = s.x;
  const double eta = 0.1;
  for (int i = 0; i < 30; ++i) {
    s = lsvrg_step(s, one, eta, 0.3, rng);
    x = x - eta * full_grad(one, x);
    CHECK((s.x - x).cwiseAbs().maxCoeff() <= 1e-12);
  }

  const auto p = fx::random_problem(5, 3, 1.0, 5.0, 8);
  const auto& k = p.constants();
  SvrpState at = svrp_init(p, k.x_star);
  for (int i = 0; i < 10; ++i) {
    at = lsvrg_step(at, p, 0.05, 0.2, rng);
    CHECK((at.x - k.x_star).norm() <= 1e-12);
  }

  // unbiased: E_m[grad f_m(x) - grad f_m(w) + grad f(w)] = grad f(x)
  const Vector xv = Vector::LinSpaced(3, 0, 1), w = Vector::LinSpaced(3, -1, 2);
  Vector acc = Vector::Zero(3);
  for (std::size_t m = 0; m < 5; ++m) {
    acc += eval_grad(p.client(m), xv) - eval_grad(p.client(m), w) + full_grad(p, w);
  }
  CHECK((acc / 5 - full_grad(p, xv)).norm() <= 1e-12);
}

TEST_CASE("SCAFFOLD hand simulation") {
  const auto p = scalar_pair();
  const double eta = 0.1;

  // first step with zero controls equals an SGD step
  {
    Rng ra(17), rb(17);
    const ScaffoldState a = scaffold_step(scaffold_init(p, Vector::Zero(1)), p, eta, ra);
    const SgdState b = sgd_step(sgd_init(Vector::Zero(1)), p, eta, rb);
    CHECK(a.x == b.x);
  }

  Rng rng(23);
  ScaffoldState s = scaffold_init(p, Vector::Zero(1));
  double x = 0, c[2] = {0, 0};
  auto grad = [](std::size_t m, double v) { return m == 0 ? 2 * (v - 1) : 2 * (v + 1); };
  for (int i = 0; i < 3; ++i) {
    StepInfo info;
    s = scaffold_step(s, p, eta, rng, &info);
    const std::size_t m = info.client;
    const double g = grad(m, x);
    x -= eta * (g - c[m] + 0.5 * (c[0] + c[1]));
    c[m] = g;
    CHECK(s.x(0) == doctest::Approx(x).epsilon(1e-15));
    CHECK(s.controls[m](0) == doctest::Approx(c[m]));
    CHECK(s.control_mean(0) == doctest::Approx(0.5 * (c[0] + c[1])));
  }

  // at x* with controls equal to the client gradients nothing moves
  ScaffoldState fixed = scaffold_init(p, Vector::Zero(1));
  fixed.controls = {Vector::Constant(1, grad(0, 0)), Vector::Constant(1, grad(1, 0))};
  fixed.control_mean = Vector::Zero(1);
  for (int i = 0; i < 5; ++i) {
    fixed = scaffold_step(fixed, p, eta, rng);
    CHECK(fixed.x(0) == 0.0);
  }
}

TEST_CASE("recurrence bound on random instances") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const double theta = std::exp(fx::uniform(rng, std::log(1e-4), std::log(10.0)));
    const double c = fx::uniform(rng, 0.0, 5.0);
    const double r0 = fx::uniform(rng, 0.0, 100.0);
    const std::size_t K = rng() % 2000;
    CHECK(recurrence_iterate(r0, theta, c, K) <=
          recurrence_bound(r0, theta, c, K) * (1 + 1e-12) + 1e-300);
  }
}

TEST_CASE("every step function is seed deterministic") {
  const auto p = fx::random_problem(6, 4, 1.0, 6.0, 10);
  auto twice = [&](auto fn) { CHECK(fn() == fn()); };
  twice([&] {
    auto prox = exact_prox(0.2);
    Rng rng(77);
    SppmState s = sppm_init(Vector::Ones(4));
    for (int i = 0; i < 40; ++i) s = sppm_step(s, p, prox, rng);
    return s.x;
  });
  twice([&] {
    ProxEvaluator prox(ProxSpec{ProxMethod::agd, 1e-10, 0, 0.2});
    Rng rng(77);
    SvrpState s = svrp_init(p, Vector::Ones(4));
    for (int i = 0; i < 40; ++i) s = svrp_step(s, p, prox, 0.2, rng);
    return s.x;
  });
  twice([&] {
    Rng rng(77);
    SvrpState s = svrp_init(p, Vector::Ones(4));
    for (int i = 0; i < 40; ++i) s = lsvrg_step(s, p, 0.02, 0.2, rng);
    return s.x;
  });
  twice([&] {
    Rng rng(77);
    ScaffoldState s = scaffold_init(p, Vector::Ones(4));
    for (int i = 0; i < 40; ++i) s = scaffold_step(s, p, 0.02, rng);
    return s.x;
  });
}
