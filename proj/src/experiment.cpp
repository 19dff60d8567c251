#include "proxfed/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace proxfed {

using nlohmann::json;

namespace {

[[noreturn]] void config_fail(const std::string& msg) {
  throw Error(ErrorKind::invalid_config, msg);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_fail(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) config_fail("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get_or(const json& obj, const char* key, const std::string& where, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) config_fail(where + "." + key + " must be a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) config_fail(where + "." + key + " must be a string");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) config_fail(where + "." + key + " must be a number");
    } else {
      if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0)) {
        config_fail(where + "." + key + " must be a non-negative integer");
      }
    }
    return it->get<T>();
  } catch (const json::exception& e) {
    config_fail(where + "." + key + ": " + e.what());
  }
}

template <class T>
T get_required(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) config_fail("missing " + where + "." + key);
  return get_or<T>(obj, key, where, T{});
}

ProblemConfig parse_problem(const json& j) {
  ProblemConfig p;
  const std::string source = get_required<std::string>(j, "source", "problem");
  if (source == "synthetic") {
    check_keys(j, "problem", {"source", "mode", "M", "n", "d", "delta", "L", "lambda",
                              "noise_std", "similarity_rank", "seed", "regularizer"});
    p.source = ProblemSource::synthetic;
    SyntheticSpec& s = p.synthetic;
    const std::string mode = get_or<std::string>(j, "mode", "problem", "direct-hessian");
    if (mode == "direct-hessian") {
      s.mode = SyntheticMode::direct_hessian;
    } else if (mode == "data-vectors") {
      s.mode = SyntheticMode::data_vectors;
    } else {
      config_fail("problem.mode must be direct-hessian or data-vectors");
    }
    s.M = get_required<std::size_t>(j, "M", "problem");
    s.n = get_or<std::size_t>(j, "n", "problem", 0);
    s.d = get_required<std::size_t>(j, "d", "problem");
    s.delta_target = get_required<double>(j, "delta", "problem");
    s.L_target = get_required<double>(j, "L", "problem");
    s.lambda = get_required<double>(j, "lambda", "problem");
    s.noise_std = get_or<double>(j, "noise_std", "problem", 0.0);
    s.similarity_rank = get_or<std::size_t>(j, "similarity_rank", "problem", 0);
    s.seed = get_or<std::uint64_t>(j, "seed", "problem", 0);
  } else if (source == "libsvm") {
    check_keys(j, "problem", {"source", "path", "M", "n_per_client", "lambda", "seed", "dim",
                              "remap_labels", "identity", "regularizer"});
    p.source = ProblemSource::libsvm;
    p.path = get_required<std::string>(j, "path", "problem");
    p.partition.M = get_required<std::size_t>(j, "M", "problem");
    p.partition.n_per_client = get_required<std::size_t>(j, "n_per_client", "problem");
    p.partition.lambda = get_required<double>(j, "lambda", "problem");
    p.partition.seed = get_or<std::uint64_t>(j, "seed", "problem", 0);
    p.partition.remap_labels = get_or<bool>(j, "remap_labels", "problem", false);
    p.partition.identity = get_or<bool>(j, "identity", "problem", false);
    p.libsvm_dim = get_or<std::size_t>(j, "dim", "problem", 0);
    if (p.partition.M == 0) config_fail("problem.M must be >= 1");
    if (p.partition.n_per_client == 0) config_fail("problem.n_per_client must be >= 1");
    if (p.partition.lambda < 0.0) config_fail("problem.lambda must be >= 0");
  } else if (source == "file") {
    check_keys(j, "problem", {"source", "path", "regularizer"});
    p.source = ProblemSource::file;
    p.path = get_required<std::string>(j, "path", "problem");
  } else {
    config_fail("problem.source must be synthetic, libsvm or file");
  }

  if (j.contains("regularizer")) {
    const json& r = j["regularizer"];
    check_keys(r, "problem.regularizer", {"kind", "weight", "radius"});
    const std::string kind = get_required<std::string>(r, "kind", "problem.regularizer");
    if (kind == "l1") {
      const double w = get_required<double>(r, "weight", "problem.regularizer");
      if (!(w > 0.0)) config_fail("problem.regularizer.weight must be > 0");
      p.regularizer = Regularizer::l1(w);
    } else if (kind == "ball") {
      const double rad = get_required<double>(r, "radius", "problem.regularizer");
      if (!(rad > 0.0)) config_fail("problem.regularizer.radius must be > 0");
      p.regularizer = Regularizer::ball(rad);
    } else if (kind != "none") {
      config_fail("problem.regularizer.kind must be none, l1 or ball");
    }
  }
  return p;
}

AlgorithmConfig parse_algorithm_entry(const json& j, std::size_t index) {
  const std::string where = "algorithms[" + std::to_string(index) + "]";
  AlgorithmConfig a;
  if (j.is_string()) {
    a.algo = parse_algorithm(j.get<std::string>());
    a.label = to_string(a.algo);
    return a;
  }
  check_keys(j, where, {"name", "label", "eta", "p", "b", "prox", "max_inner_iters"});
  a.algo = parse_algorithm(get_required<std::string>(j, "name", where));
  a.label = get_or<std::string>(j, "label", where, to_string(a.algo));
  if (j.contains("eta")) {
    a.eta = get_or<double>(j, "eta", where, 0.0);
    require(a.eta > 0.0 && std::isfinite(a.eta), ErrorKind::invalid_override,
            where + ".eta must be > 0");
  }
  if (j.contains("p")) {
    a.p = get_or<double>(j, "p", where, 0.0);
    require(a.p > 0.0 && a.p <= 1.0, ErrorKind::invalid_override, where + ".p must lie in (0, 1]");
  }
  if (j.contains("b")) {
    a.b = get_or<double>(j, "b", where, 0.0);
    require(*a.b >= 0.0 && std::isfinite(*a.b), ErrorKind::invalid_override,
            where + ".b must be >= 0");
  }
  if (j.contains("prox")) a.prox_method = parse_prox_method(get_or<std::string>(j, "prox", where, "exact"));
  a.max_inner_iters = get_or<std::size_t>(j, "max_inner_iters", where, 0);
  return a;
}

json regularizer_json(const Regularizer& r) {
  switch (r.kind) {
    case RegularizerKind::l1: return {{"kind", "l1"}, {"weight", r.weight}};
    case RegularizerKind::ball: return {{"kind", "ball"}, {"radius", r.radius}};
    default: return {{"kind", "none"}};
  }
}

json config_json(const ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  json p;
  switch (cfg.problem.source) {
    case ProblemSource::synthetic: {
      const SyntheticSpec& s = cfg.problem.synthetic;
      p = {{"source", "synthetic"},
           {"mode", s.mode == SyntheticMode::direct_hessian ? "direct-hessian" : "data-vectors"},
           {"M", s.M},
           {"d", s.d},
           {"delta", s.delta_target},
           {"L", s.L_target},
           {"lambda", s.lambda},
           {"noise_std", s.noise_std},
           {"seed", s.seed}};
      if (s.n) p["n"] = s.n;
      if (s.similarity_rank) p["similarity_rank"] = s.similarity_rank;
      break;
    }
    case ProblemSource::libsvm: {
      const PartitionSpec& s = cfg.problem.partition;
      p = {{"source", "libsvm"},     {"path", cfg.problem.path},
           {"M", s.M},               {"n_per_client", s.n_per_client},
           {"lambda", s.lambda},     {"seed", s.seed},
           {"remap_labels", s.remap_labels}};
      if (s.identity) p["identity"] = true;
      if (cfg.problem.libsvm_dim) p["dim"] = cfg.problem.libsvm_dim;
      break;
    }
    case ProblemSource::file:
      p = {{"source", "file"}, {"path", cfg.problem.path}};
      break;
  }
  if (!cfg.problem.regularizer.is_none()) p["regularizer"] = regularizer_json(cfg.problem.regularizer);
  j["problem"] = p;
  json algos = json::array();
  for (const auto& a : cfg.algorithms) {
    json e = {{"name", to_string(a.algo)}, {"label", a.label}};
    if (a.eta > 0.0) e["eta"] = a.eta;
    if (a.p > 0.0) e["p"] = a.p;
    if (a.b) e["b"] = *a.b;
    if (a.prox_method != ProxMethod::exact) e["prox"] = to_string(a.prox_method);
    if (a.max_inner_iters) e["max_inner_iters"] = a.max_inner_iters;
    algos.push_back(e);
  }
  j["algorithms"] = algos;
  j["budget"] = cfg.budget;
  j["seeds"] = cfg.seeds;
  j["record_cadence"] = cfg.record_cadence;
  j["eps"] = cfg.eps;
  j["initial_sync"] = cfg.initial_sync;
  j["per_seed_lines"] = cfg.per_seed_lines;
  if (cfg.threads) j["threads"] = cfg.threads;
  j["output_dir"] = cfg.output_dir;
  return j;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.algorithms.empty()) config_fail("at least one algorithm is required");
  if (cfg.budget == 0) config_fail("budget must be > 0");
  if (cfg.seeds.empty()) config_fail("at least one seed is required");
  if (cfg.record_cadence == 0) config_fail("record_cadence must be >= 1");
  if (!(cfg.eps > 0.0)) config_fail("eps must be > 0");
  std::set<std::string> labels;
  for (const auto& a : cfg.algorithms) {
    if (a.label.empty()) config_fail("algorithm labels must be non-empty");
    if (!labels.insert(a.label).second) config_fail("duplicate algorithm label '" + a.label + "'");
  }
  std::set<std::uint64_t> seeds(cfg.seeds.begin(), cfg.seeds.end());
  if (seeds.size() != cfg.seeds.size()) config_fail("seeds must be distinct");
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_fail(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config", {"name", "problem", "algorithms", "budget", "seeds", "record_cadence",
                           "eps", "initial_sync", "per_seed_lines", "threads", "output_dir"});
  ExperimentConfig cfg;
  cfg.name = get_or<std::string>(j, "name", "config", "experiment");
  if (!j.contains("problem")) config_fail("missing config.problem");
  cfg.problem = parse_problem(j["problem"]);
  if (!j.contains("algorithms") || !j["algorithms"].is_array()) {
    config_fail("config.algorithms must be an array");
  }
  for (std::size_t i = 0; i < j["algorithms"].size(); ++i) {
    cfg.algorithms.push_back(parse_algorithm_entry(j["algorithms"][i], i));
  }
  cfg.budget = get_required<std::size_t>(j, "budget", "config");
  if (!j.contains("seeds") || !j["seeds"].is_array()) config_fail("config.seeds must be an array");
  for (const auto& s : j["seeds"]) {
    if (!s.is_number_unsigned()) config_fail("seeds must be non-negative integers");
    cfg.seeds.push_back(s.get<std::uint64_t>());
  }
  cfg.record_cadence = get_or<std::size_t>(j, "record_cadence", "config", 1);
  cfg.eps = get_or<double>(j, "eps", "config", 1e-6);
  cfg.initial_sync = get_or<bool>(j, "initial_sync", "config", true);
  cfg.per_seed_lines = get_or<bool>(j, "per_seed_lines", "config", false);
  cfg.threads = get_or<std::size_t>(j, "threads", "config", 0);
  cfg.output_dir = get_or<std::string>(j, "output_dir", "config", "out/" + cfg.name);
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_fail("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig cfg = parse_config(ss.str());
  // Relative data paths are taken relative to the config file.
  if (cfg.problem.source != ProblemSource::synthetic) {
    std::filesystem::path data(cfg.problem.path);
    if (data.is_relative() && !std::filesystem::exists(data)) {
      const auto beside = path.parent_path() / data;
      if (std::filesystem::exists(beside)) cfg.problem.path = beside.string();
    }
  }
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) { return config_json(cfg).dump(2) + "\n"; }

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"synthetic-small", "synthetic-paper", "a9a-paper",
                                                 "catalyst-demo"};
  return names;
}

namespace {

AlgorithmConfig algo(Algorithm a) {
  AlgorithmConfig c;
  c.algo = a;
  c.label = to_string(a);
  return c;
}

ExperimentConfig synthetic_preset(const std::string& name, std::size_t M, double L,
                                  std::size_t budget) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.problem.source = ProblemSource::synthetic;
  SyntheticSpec& s = cfg.problem.synthetic;
  s.M = M;
  s.d = 50;
  s.delta_target = 10.0;
  s.L_target = L;
  s.lambda = 1.0;
  s.noise_std = 1.0;
  s.seed = 2023;
  cfg.algorithms = {algo(Algorithm::svrp), algo(Algorithm::lsvrg), algo(Algorithm::sgd),
                    algo(Algorithm::scaffold)};
  cfg.budget = budget;
  cfg.seeds = {1, 2, 3, 4, 5};
  cfg.record_cadence = 10;
  cfg.eps = 1e-6;
  cfg.output_dir = "out/" + name;
  return cfg;
}

}  // namespace

ExperimentConfig preset(const std::string& name) {
  if (name == "synthetic-small") return synthetic_preset(name, 200, 3000.0, 2000);
  if (name == "synthetic-paper") return synthetic_preset(name, 1000, 3330.0, 10000);
  if (name == "a9a-paper") {
    ExperimentConfig cfg;
    cfg.name = name;
    cfg.problem.source = ProblemSource::libsvm;
    cfg.problem.path = "data/a9a";
    cfg.problem.libsvm_dim = 123;
    cfg.problem.partition.M = 20;
    cfg.problem.partition.n_per_client = 2000;
    cfg.problem.partition.lambda = 0.1;
    cfg.problem.partition.seed = 2023;
    cfg.algorithms = {algo(Algorithm::svrp), algo(Algorithm::lsvrg), algo(Algorithm::sgd),
                      algo(Algorithm::scaffold)};
    cfg.budget = 10000;
    cfg.seeds = {1, 2, 3, 4, 5};
    cfg.record_cadence = 10;
    cfg.output_dir = "out/" + name;
    return cfg;
  }
  if (name == "catalyst-demo") {
    ExperimentConfig cfg;
    cfg.name = name;
    cfg.problem.source = ProblemSource::synthetic;
    SyntheticSpec& s = cfg.problem.synthetic;
    s.M = 16;
    s.d = 10;
    s.delta_target = 50.0;
    s.L_target = 100.0;
    s.lambda = 1.0;
    s.noise_std = 1.0;
    s.seed = 7;
    cfg.algorithms = {algo(Algorithm::svrp), algo(Algorithm::catalyst)};
    cfg.budget = 400000;
    cfg.seeds = {1, 2, 3, 4, 5};
    cfg.record_cadence = 100;
    cfg.eps = 1e-8;
    cfg.output_dir = "out/" + name;
    return cfg;
  }
  std::string known;
  for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  config_fail("unknown preset '" + name + "'; available presets: " + known);
}

FederatedProblem build_problem(const ProblemConfig& cfg) {
  FederatedProblem problem = [&] {
    switch (cfg.source) {
      case ProblemSource::synthetic: return generate_synthetic(cfg.synthetic);
      case ProblemSource::libsvm: {
        LibsvmDataset data;
        try {
          data = load_libsvm(cfg.path, cfg.libsvm_dim);
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::parse_error) {
            throw Error(ErrorKind::data_unreadable, cfg.path + ": " + e.what());
          }
          throw;
        }
        require(!data.rows.empty(), ErrorKind::data_unreadable, "data file '" + cfg.path + "' has no rows");
        return partition(data, cfg.partition).problem;
      }
      case ProblemSource::file: {
        std::ifstream in(cfg.path);
        require(static_cast<bool>(in), ErrorKind::data_unreadable,
                "cannot open problem file '" + cfg.path + "'");
        try {
          return read_problem(in);
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::parse_error) {
            throw Error(ErrorKind::data_unreadable, cfg.path + ": " + e.what());
          }
          throw;
        }
      }
    }
    throw Error(ErrorKind::invalid_config, "unknown problem source");
  }();
  if (!cfg.regularizer.is_none()) problem = problem.with_regularizer(cfg.regularizer);
  return problem;
}

double quantile(std::vector<double> values, double prob) {
  require(!values.empty(), ErrorKind::invalid_argument, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<SummaryRow> summarize(const ExperimentConfig& cfg, const std::vector<RunTrace>& runs) {
  std::vector<SummaryRow> rows;
  for (const auto& a : cfg.algorithms) {
    std::vector<double> finals;
    for (const auto& r : runs) {
      if (r.algo == a.label && !r.samples.empty()) finals.push_back(r.samples.back().sq_dist);
    }
    SummaryRow row;
    row.algo = a.label;
    row.runs = finals.size();
    if (!finals.empty()) {
      row.median = quantile(finals, 0.5);
      row.q1 = quantile(finals, 0.25);
      row.q3 = quantile(finals, 0.75);
    }
    rows.push_back(row);
  }
  return rows;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  ExperimentReport report;
  report.config = cfg;
  const FederatedProblem problem = build_problem(cfg.problem);
  report.constants = problem.constants();
  report.num_clients = problem.num_clients();
  report.dim = problem.dim();

  struct Job {
    std::size_t algo;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a)
    for (std::uint64_t s : cfg.seeds) jobs.push_back({a, s});

  // Resolve once up front so configuration errors surface before any work.
  for (const auto& a : cfg.algorithms) {
    resolve_params(a, problem, cfg.eps, Vector::Zero(problem.dim()));
  }

  report.runs.resize(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        SimOptions opts;
        opts.budget = cfg.budget;
        opts.seed = jobs[i].seed;
        opts.record_cadence = cfg.record_cadence;
        opts.initial_sync = cfg.initial_sync;
        opts.eps = cfg.eps;
        report.runs[i] = simulate(cfg.algorithms[jobs[i].algo], problem, opts);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  report.summary = summarize(cfg, report.runs);
  return report;
}

std::string run_file_name(const RunTrace& trace) {
  std::string label;
  for (char c : trace.algo) {
    label += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  }
  return label + "_seed" + std::to_string(trace.seed) + ".csv";
}

namespace {

json params_json(const ResolvedParams& p) {
  json j = {{"eta", p.eta}, {"p", p.p}, {"b", p.b}, {"prox", to_string(p.prox_method)}};
  if (p.max_inner_iters) j["max_inner_iters"] = p.max_inner_iters;
  if (p.theorem) {
    j["theorem"] = {{"eta", p.theorem->eta}, {"p", p.theorem->p}, {"b", p.theorem->b},
                    {"tau", p.theorem->tau}, {"K", p.theorem->K}};
  }
  if (p.catalyst) {
    const CatalystParams& c = *p.catalyst;
    j["catalyst"] = {{"gamma", c.gamma},         {"q", c.q},
                     {"rho", c.rho},             {"alpha0", c.alpha0},
                     {"A", c.A},                 {"tau_inner", c.tau_inner},
                     {"T_outer", c.T_outer},     {"T_inner", c.T_inner},
                     {"inner_eta", c.inner_eta}, {"inner_p", c.inner_p},
                     {"accelerated", c.accelerated}};
  }
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::data_unreadable, "cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "runs");
  const ExperimentConfig& cfg = report.config;

  json runs = json::array();
  for (const auto& r : report.runs) {
    std::ostringstream csv;
    write_trace_header(csv);
    write_trace_rows(csv, r);
    const std::string file = "runs/" + run_file_name(r);
    write_text(dir / file, csv.str());
    json entry = {{"algo", r.algo},
                  {"seed", r.seed},
                  {"file", file},
                  {"iterations", r.iterations},
                  {"comm_total", r.ledger.total()},
                  {"samples", r.samples.size()}};
    if (!r.samples.empty()) entry["final_sq_dist"] = r.samples.back().sq_dist;
    if (!r.warnings.empty()) entry["warnings"] = r.warnings;
    runs.push_back(entry);
  }

  std::ostringstream summary;
  summary << "algo,runs,final_sq_dist_median,final_sq_dist_q1,final_sq_dist_q3\n";
  json summary_json = json::array();
  for (const auto& s : report.summary) {
    summary << s.algo << ',' << s.runs << ',' << format_double(s.median) << ','
            << format_double(s.q1) << ',' << format_double(s.q3) << '\n';
    summary_json.push_back(
        {{"algo", s.algo}, {"runs", s.runs}, {"median", s.median}, {"q1", s.q1}, {"q3", s.q3}});
  }
  write_text(dir / "summary.csv", summary.str());

  json algos = json::array();
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
    for (const auto& r : report.runs) {
      if (r.algo == cfg.algorithms[a].label) {
        algos.push_back({{"label", r.algo},
                         {"algorithm", to_string(cfg.algorithms[a].algo)},
                         {"params", params_json(r.params)}});
        break;
      }
    }
  }

  const ProblemConstants& k = report.constants;
  json j;
  j["name"] = cfg.name;
  j["config"] = config_json(cfg);
  j["problem"] = {{"M", report.num_clients}, {"d", report.dim}};
  j["constants"] = {{"mu", k.mu},
                    {"L", k.L},
                    {"delta", k.delta},
                    {"sigma_star_sq", k.sigma_star_sq},
                    {"f_star", k.f_star},
                    {"kappa", k.kappa()}};
  j["algorithms"] = algos;
  j["runs"] = runs;
  j["summary"] = summary_json;
  write_text(dir / "report.json", j.dump(2) + "\n");

  write_text(dir / "convergence.svg",
             emit_plot(series_from_runs(cfg, report.runs), cfg.name, cfg.per_seed_lines));
}

std::vector<PlotSeries> series_from_runs(const ExperimentConfig& cfg,
                                         const std::vector<RunTrace>& runs) {
  std::vector<PlotSeries> series;
  for (const auto& a : cfg.algorithms) {
    PlotSeries s;
    s.label = a.label;
    for (const auto& r : runs) {
      if (r.algo != a.label || r.samples.empty()) continue;
      std::vector<std::pair<double, double>> pts;
      for (const auto& p : r.samples) pts.emplace_back(static_cast<double>(p.comm_steps), p.sq_dist);
      s.seeds.push_back(std::move(pts));
    }
    if (!s.seeds.empty()) series.push_back(std::move(s));
  }
  return series;
}

std::vector<PlotSeries> read_report_series(const std::filesystem::path& dir, std::string* title) {
  std::ifstream in(dir / "report.json");
  require(static_cast<bool>(in), ErrorKind::data_unreadable,
          "no report.json in '" + dir.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::data_unreadable, "report.json is not valid JSON: " + std::string(e.what()));
  }
  if (title) *title = j.value("name", std::string("experiment"));
  std::vector<PlotSeries> series;
  for (const auto& run : j.at("runs")) {
    const std::string algo = run.at("algo").get<std::string>();
    const std::string file = run.at("file").get<std::string>();
    std::ifstream csv(dir / file);
    require(static_cast<bool>(csv), ErrorKind::data_unreadable, "cannot read '" + file + "'");
    std::vector<std::pair<double, double>> pts;
    std::string line;
    std::getline(csv, line);  // header
    std::size_t lineno = 1;
    while (std::getline(csv, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::vector<std::string_view> fields;
      std::string_view v(line);
      std::size_t start = 0;
      for (std::size_t i = 0; i <= v.size(); ++i) {
        if (i == v.size() || v[i] == ',') {
          fields.push_back(v.substr(start, i - start));
          start = i + 1;
        }
      }
      const auto comm = fields.size() >= 3 ? parse_double(fields[0]) : std::nullopt;
      const auto sq = fields.size() >= 3 ? parse_double(fields[2]) : std::nullopt;
      if (!comm || !sq) {
        throw Error(ErrorKind::data_unreadable,
                    file + ":" + std::to_string(lineno) + ": malformed trace row");
      }
      pts.emplace_back(comm.value(), sq.value());
    }
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const PlotSeries& s) { return s.label == algo; });
    if (it == series.end()) {
      series.push_back(PlotSeries{algo, {}});
      it = series.end() - 1;
    }
    if (!pts.empty()) it->seeds.push_back(std::move(pts));
  }
  series.erase(std::remove_if(series.begin(), series.end(),
                              [](const PlotSeries& s) { return s.seeds.empty(); }),
               series.end());
  return series;
}

}  // namespace proxfed
