#include "proxfed/fedsim.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

namespace proxfed {

const char* to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::sppm: return "sppm";
    case Algorithm::svrp: return "svrp";
    case Algorithm::svrp_composite: return "svrp-composite";
    case Algorithm::sgd: return "sgd";
    case Algorithm::lsvrg: return "lsvrg";
    case Algorithm::scaffold: return "scaffold";
    case Algorithm::catalyst: return "catalyzed-svrp";
  }
  return "svrp";
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> algos = {
      Algorithm::sppm, Algorithm::svrp,     Algorithm::svrp_composite, Algorithm::sgd,
      Algorithm::lsvrg, Algorithm::scaffold, Algorithm::catalyst};
  return algos;
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : all_algorithms()) {
    if (name == to_string(a)) return a;
  }
  if (name == "svrg") return Algorithm::lsvrg;
  if (name == "catalyst") return Algorithm::catalyst;
  std::string known;
  for (Algorithm a : all_algorithms()) known += std::string(known.empty() ? "" : ", ") + to_string(a);
  throw Error(ErrorKind::invalid_override, "unknown algorithm '" + name + "' (known: " + known + ")");
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::send_model: return "send-model";
    case EventKind::return_model: return "return-model";
    case EventKind::broadcast_anchor: return "broadcast-anchor";
    case EventKind::upload_gradient: return "upload-gradient";
    case EventKind::broadcast_full_gradient: return "broadcast-full-gradient";
    case EventKind::notify: return "notify";
    case EventKind::broadcast_center: return "broadcast-center";
  }
  return "send-model";
}

void CommLedger::stage(const CommEvent& e) {
  staged_cost_ += e.cost;
  ++staged_count_;
  if (keep_events_) staged_.push_back(e);
}

void CommLedger::commit(bool count_iteration) {
  total_ += staged_cost_;
  if (count_iteration) ++histogram_[staged_cost_];
  event_count_ += staged_count_;
  if (keep_events_) {
    events_.insert(events_.end(), staged_.begin(), staged_.end());
    staged_.clear();
  }
  staged_cost_ = 0;
  staged_count_ = 0;
}

void CommLedger::discard() {
  staged_.clear();
  staged_cost_ = 0;
  staged_count_ = 0;
}

namespace {

void stage_one(CommLedger& ledger, std::size_t step, EventKind kind, std::size_t m) {
  ledger.stage(CommEvent{step, kind, m, 1});
}

void stage_all(CommLedger& ledger, std::size_t step, EventKind kind, std::size_t M) {
  for (std::size_t m = 0; m < M; ++m) stage_one(ledger, step, kind, m);
}

// Anchor round: w to everyone, gradients back, averaged gradient out.
void stage_anchor_round(CommLedger& ledger, std::size_t step, std::size_t M) {
  stage_all(ledger, step, EventKind::broadcast_anchor, M);
  stage_all(ledger, step, EventKind::upload_gradient, M);
  stage_all(ledger, step, EventKind::broadcast_full_gradient, M);
}

void stage_coin(CommLedger& ledger, std::size_t step, std::size_t M) {
  ledger.stage(CommEvent{step, EventKind::notify, kAllClients, 0});
  stage_anchor_round(ledger, step, M);
}

double validated_p(double p) {
  require(p > 0.0 && p <= 1.0, ErrorKind::invalid_override,
          "communication probability must lie in (0, 1]");
  return p;
}

}  // namespace

ResolvedParams resolve_params(const AlgorithmConfig& cfg, const FederatedProblem& problem,
                              double eps, const Vector& x0) {
  require(cfg.eta >= 0.0 && std::isfinite(cfg.eta), ErrorKind::invalid_override,
          "stepsize override must be > 0");
  require(cfg.p >= 0.0 && cfg.p <= 1.0, ErrorKind::invalid_override,
          "communication probability must lie in (0, 1]");
  require(!cfg.b || *cfg.b >= 0.0, ErrorKind::invalid_override, "prox accuracy b must be >= 0");
  require(eps > 0.0, ErrorKind::invalid_config, "target accuracy must be > 0");

  const ProblemConstants& k = problem.constants();
  const std::size_t M = problem.num_clients();
  const double d0 = (x0 - k.x_star).squaredNorm();
  ResolvedParams r;
  r.prox_method = cfg.prox_method;
  r.max_inner_iters = cfg.max_inner_iters;
  auto pick = [](double override_value, double fallback) {
    return override_value > 0.0 ? override_value : fallback;
  };

  switch (cfg.algo) {
    case Algorithm::sppm: {
      const TheoremParams t = sppm_params(k.mu, k.sigma_star_sq, eps, d0);
      r.theorem = t;
      r.eta = pick(cfg.eta, t.eta);
      r.p = 1.0;
      r.b = cfg.b.value_or(t.b);
      break;
    }
    case Algorithm::svrp:
    case Algorithm::svrp_composite: {
      const TheoremParams t = svrp_params(k.mu, k.delta, M, eps, d0);
      r.theorem = t;
      r.eta = pick(cfg.eta, t.eta);
      r.p = validated_p(pick(cfg.p, t.p));
      r.b = cfg.b.value_or(t.b);
      if (cfg.algo == Algorithm::svrp_composite && !problem.regularizer().is_none() &&
          r.prox_method == ProxMethod::exact) {
        r.prox_method = ProxMethod::composite_pg;
      }
      break;
    }
    case Algorithm::sgd:
      r.eta = pick(cfg.eta, 1.0 / (2.0 * k.L));
      break;
    case Algorithm::lsvrg:
      r.eta = pick(cfg.eta, 1.0 / (6.0 * k.L));
      r.p = validated_p(pick(cfg.p, 1.0 / static_cast<double>(M)));
      break;
    case Algorithm::scaffold:
      r.eta = pick(cfg.eta, 1.0 / (6.0 * k.L));
      break;
    case Algorithm::catalyst: {
      CatalystParams c = catalyst_params(k.mu, k.delta, M, k.L, eps, problem.value(x0) - k.f_star);
      c.inner_eta = pick(cfg.eta, c.inner_eta);
      c.inner_p = validated_p(pick(cfg.p, c.inner_p));
      r.catalyst = c;
      r.eta = c.inner_eta;
      r.p = c.inner_p;
      r.b = 0.0;
      r.prox_method = ProxMethod::exact;
      break;
    }
  }
  return r;
}

double expected_comm_per_iter(Algorithm algo, double p, std::size_t M) {
  switch (algo) {
    case Algorithm::sppm:
    case Algorithm::sgd: return 2.0;
    case Algorithm::scaffold: return 4.0;
    default: return 2.0 + 3.0 * p * static_cast<double>(M);
  }
}

std::size_t initial_sync_cost(std::size_t M) { return 3 * M; }

std::size_t initial_sync_cost(Algorithm algo, std::size_t M, double catalyst_gamma) {
  switch (algo) {
    case Algorithm::svrp:
    case Algorithm::svrp_composite:
    case Algorithm::lsvrg: return initial_sync_cost(M);
    case Algorithm::catalyst: return initial_sync_cost(M) + (catalyst_gamma > 0.0 ? M : 0);
    default: return 0;
  }
}

namespace {

// Shared driver. Step(state, rng, ledger, iter) returns the next state and
// stages that iteration's events; Point(state) is the reported model.
template <class State, class Step, class Point>
void drive(State state, Step step, Point point, const FederatedProblem& problem,
           const SimOptions& opts, RunTrace& trace) {
  const ProblemConstants& k = problem.constants();
  const std::size_t cadence = std::max<std::size_t>(1, opts.record_cadence);
  Rng rng(opts.seed);

  auto sample = [&](std::size_t iter) {
    const Vector& x = point(state);
    trace.samples.push_back(TraceSample{trace.ledger.total(), iter, (x - k.x_star).squaredNorm(),
                                        problem.value(x) - k.f_star});
  };

  sample(0);
  std::size_t iter = 0;
  for (;;) {
    State next = step(state, rng, trace.ledger, iter + 1);
    if (trace.ledger.total() + trace.ledger.staged_cost() > opts.budget) {
      trace.ledger.discard();
      break;
    }
    trace.ledger.commit();
    state = std::move(next);
    ++iter;
    if (iter % cadence == 0) sample(iter);
  }
  if (iter == 0) {
    trace.samples.clear();
    trace.warnings.push_back("budget " + std::to_string(opts.budget) +
                             " is smaller than the initial sync plus one iteration");
  } else if (trace.samples.back().iter != iter) {
    sample(iter);
  }
  trace.iterations = iter;
  trace.final_x = point(state);
}

}  // namespace

RunTrace simulate(const AlgorithmConfig& cfg, const FederatedProblem& problem,
                  const SimOptions& opts) {
  require(opts.budget > 0, ErrorKind::invalid_config, "communication budget must be > 0");
  const auto start = std::chrono::steady_clock::now();
  const Vector x0 = opts.x0.value_or(Vector::Zero(problem.dim()));
  require_dim(x0.size(), problem.dim(), "initial point");

  RunTrace trace;
  trace.algo = cfg.label.empty() ? to_string(cfg.algo) : cfg.label;
  trace.seed = opts.seed;
  trace.ledger = CommLedger(opts.keep_events);
  trace.params = resolve_params(cfg, problem, opts.eps, x0);
  const ResolvedParams& rp = trace.params;
  const std::size_t M = problem.num_clients();

  const double gamma = rp.catalyst ? rp.catalyst->gamma : 0.0;
  if (opts.initial_sync && initial_sync_cost(cfg.algo, M, gamma) > 0) {
    if (cfg.algo == Algorithm::catalyst && gamma > 0.0) {
      stage_all(trace.ledger, 0, EventKind::broadcast_center, M);
    }
    stage_anchor_round(trace.ledger, 0, M);
    if (trace.ledger.staged_cost() > opts.budget) {
      trace.ledger.discard();
      trace.warnings.push_back("budget " + std::to_string(opts.budget) +
                               " is smaller than the initial sync");
      trace.final_x = x0;
      return trace;
    }
    trace.ledger.commit(false);
  }

  ProxSpec spec;
  spec.method = rp.prox_method;
  spec.b = rp.b;
  spec.eta = rp.eta;
  spec.max_inner_iters = rp.max_inner_iters;
  const bool uses_prox = cfg.algo == Algorithm::sppm || cfg.algo == Algorithm::svrp ||
                         cfg.algo == Algorithm::svrp_composite || cfg.algo == Algorithm::catalyst;
  std::optional<ProxEvaluator> prox;
  if (uses_prox) prox.emplace(spec);

  auto client_pair = [](CommLedger& l, std::size_t it, const StepInfo& info, EventKind back) {
    stage_one(l, it, EventKind::send_model, info.client);
    stage_one(l, it, back, info.client);
  };

  switch (cfg.algo) {
    case Algorithm::sppm:
      drive(
          sppm_init(x0),
          [&](const SppmState& s, Rng& rng, CommLedger& l, std::size_t it) {
            StepInfo info;
            SppmState n = sppm_step(s, problem, *prox, rng, &info);
            client_pair(l, it, info, EventKind::return_model);
            return n;
          },
          [](const SppmState& s) -> const Vector& { return s.x; }, problem, opts, trace);
      break;
    case Algorithm::svrp:
    case Algorithm::svrp_composite: {
      const bool composite = cfg.algo == Algorithm::svrp_composite;
      drive(
          svrp_init(problem, x0),
          [&](const SvrpState& s, Rng& rng, CommLedger& l, std::size_t it) {
            StepInfo info;
            SvrpState n = composite
                              ? svrp_composite_step(s, problem, problem.regularizer(), *prox,
                                                    rp.p, rng, &info)
                              : svrp_step(s, problem, *prox, rp.p, rng, &info);
            client_pair(l, it, info, EventKind::return_model);
            if (info.coin) stage_coin(l, it, M);
            return n;
          },
          [](const SvrpState& s) -> const Vector& { return s.x; }, problem, opts, trace);
      break;
    }
    case Algorithm::sgd:
      drive(
          sgd_init(x0),
          [&](const SgdState& s, Rng& rng, CommLedger& l, std::size_t it) {
            StepInfo info;
            SgdState n = sgd_step(s, problem, rp.eta, rng, &info);
            client_pair(l, it, info, EventKind::upload_gradient);
            return n;
          },
          [](const SgdState& s) -> const Vector& { return s.x; }, problem, opts, trace);
      break;
    case Algorithm::lsvrg:
      drive(
          svrp_init(problem, x0),
          [&](const SvrpState& s, Rng& rng, CommLedger& l, std::size_t it) {
            StepInfo info;
            SvrpState n = lsvrg_step(s, problem, rp.eta, rp.p, rng, &info);
            client_pair(l, it, info, EventKind::upload_gradient);
            if (info.coin) stage_coin(l, it, M);
            return n;
          },
          [](const SvrpState& s) -> const Vector& { return s.x; }, problem, opts, trace);
      break;
    case Algorithm::scaffold:
      drive(
          scaffold_init(problem, x0),
          [&](const ScaffoldState& s, Rng& rng, CommLedger& l, std::size_t it) {
            StepInfo info;
            ScaffoldState n = scaffold_step(s, problem, rp.eta, rng, &info);
            // model and control mean out; gradient and control update back
            stage_one(l, it, EventKind::send_model, info.client);
            stage_one(l, it, EventKind::broadcast_full_gradient, info.client);
            stage_one(l, it, EventKind::upload_gradient, info.client);
            stage_one(l, it, EventKind::upload_gradient, info.client);
            return n;
          },
          [](const ScaffoldState& s) -> const Vector& { return s.x; }, problem, opts, trace);
      break;
    case Algorithm::catalyst: {
      const CatalystParams& cp = *rp.catalyst;
      drive(
          catalyst_init(x0, cp),
          [&](const CatalystState& s, Rng& rng, CommLedger& l, std::size_t it) {
            CatalystStepInfo info;
            CatalystState n = catalyst_step(s, problem, cp, *prox, rng, &info);
            // The first restart is the initial sync, charged up front.
            if (info.outer_started && s.t > 0) {
              if (cp.gamma > 0.0) stage_all(l, it, EventKind::broadcast_center, M);
              stage_anchor_round(l, it, M);
            }
            client_pair(l, it, info.inner, EventKind::return_model);
            if (info.inner.coin) stage_coin(l, it, M);
            return n;
          },
          [](const CatalystState& s) -> const Vector& { return s.x; }, problem, opts, trace);
      break;
    }
  }

  if (prox && prox->uncertified_calls() > 0) {
    trace.warnings.push_back(std::to_string(prox->uncertified_calls()) +
                             " prox calls hit the inner iteration cap without certifying");
  }
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

void write_trace_header(std::ostream& out) {
  out << "comm_steps,iter,sq_dist,subopt,seed,algo\n";
}

void write_trace_rows(std::ostream& out, const RunTrace& trace) {
  for (const auto& s : trace.samples) {
    out << s.comm_steps << ',' << s.iter << ',' << format_double(s.sq_dist) << ','
        << format_double(s.subopt) << ',' << trace.seed << ',' << trace.algo << '\n';
  }
}

}  // namespace proxfed
