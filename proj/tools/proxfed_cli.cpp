#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "proxfed/experiment.hpp"

using namespace proxfed;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kInvalidConfig = 2;
constexpr int kDataUnreadable = 3;
constexpr int kInfeasible = 4;
constexpr int kInvalidOverride = 5;
constexpr int kNumerical = 6;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_config: return kInvalidConfig;
    case ErrorKind::data_unreadable:
    case ErrorKind::parse_error: return kDataUnreadable;
    case ErrorKind::infeasible_spec: return kInfeasible;
    case ErrorKind::invalid_override: return kInvalidOverride;
    default: return kNumerical;
  }
}

ExperimentConfig config_from(const std::string& arg) {
  if (std::filesystem::exists(arg)) return load_config(arg);
  for (const auto& n : preset_names()) {
    if (n == arg) return preset(arg);
  }
  throw Error(ErrorKind::invalid_config, "no config file or preset named '" + arg + "'");
}

std::filesystem::path output_dir(const ExperimentConfig& cfg, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PROXFED_OUTPUT_DIR"); env && *env) {
    return std::filesystem::path(env) / cfg.name;
  }
  return cfg.output_dir;
}

void print_constants(const FederatedProblem& problem) {
  const ProblemConstants& k = problem.constants();
  std::cout << "clients        " << problem.num_clients() << '\n'
            << "dim            " << problem.dim() << '\n'
            << "mu             " << format_double(k.mu) << '\n'
            << "L              " << format_double(k.L) << '\n'
            << "delta          " << format_double(k.delta) << '\n'
            << "sigma_star_sq  " << format_double(k.sigma_star_sq) << '\n'
            << "f_star         " << format_double(k.f_star) << '\n'
            << "kappa          " << format_double(k.kappa()) << '\n'
            << "delta/mu       " << format_double(k.delta / k.mu) << '\n';
}

int run(ExperimentConfig cfg, const std::string& out_flag, std::size_t threads) {
  if (threads) cfg.threads = threads;
  const auto dir = output_dir(cfg, out_flag);
  const ExperimentReport report = run_experiment(cfg);
  write_report(report, dir);
  for (const auto& r : report.runs) {
    for (const auto& w : r.warnings) std::cerr << "warning: " << r.algo << " seed " << r.seed << ": " << w << '\n';
  }
  std::cout << "wrote " << dir.string() << '\n';
  std::cout << "algo,runs,final_sq_dist_median,q1,q3\n";
  for (const auto& s : report.summary) {
    std::cout << s.algo << ',' << s.runs << ',' << format_double(s.median) << ','
              << format_double(s.q1) << ',' << format_double(s.q3) << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated stochastic proximal-point experiments"};
  app.require_subcommand(1);

  std::string config_path, out_flag, preset_name, report_dir, emit_path;
  std::size_t threads = 0;
  bool emit_config = false;

  auto* run_cmd = app.add_subcommand("run", "Run every (algorithm, seed) pair of a config");
  run_cmd->add_option("config", config_path, "JSON config file")->required();
  run_cmd->add_option("-o,--output-dir", out_flag, "Output directory (overrides config and env)");
  run_cmd->add_option("-j,--threads", threads, "Worker threads (0: all cores)");

  auto* preset_cmd = app.add_subcommand("preset", "Run a built-in preset or print its config");
  preset_cmd->add_option("name", preset_name, "Preset name")->required();
  preset_cmd->add_flag("--emit-config", emit_config, "Print the preset's JSON config and exit");
  preset_cmd->add_option("-o,--output-dir", out_flag, "Output directory (overrides config and env)");
  preset_cmd->add_option("-j,--threads", threads, "Worker threads (0: all cores)");

  auto* const_cmd = app.add_subcommand("constants", "Print measured problem constants");
  const_cmd->add_option("config", config_path, "JSON config file or preset name")->required();
  const_cmd->add_option("--save-problem", emit_path, "Also write the problem in text form");

  auto* plot_cmd = app.add_subcommand("plot", "Re-render convergence.svg from a report directory");
  plot_cmd->add_option("report_dir", report_dir, "Directory written by run")->required();
  plot_cmd->add_option("-o,--output", emit_path, "SVG path (default <report_dir>/convergence.svg)");
  bool per_seed = false;
  plot_cmd->add_flag("--per-seed", per_seed, "Draw each seed's line under the median");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) return run(load_config(config_path), out_flag, threads);
    if (*preset_cmd) {
      const ExperimentConfig cfg = preset(preset_name);
      if (emit_config) {
        std::cout << config_to_json(cfg);
        return kOk;
      }
      return run(cfg, out_flag, threads);
    }
    if (*const_cmd) {
      const ExperimentConfig cfg = config_from(config_path);
      const FederatedProblem problem = build_problem(cfg.problem);
      print_constants(problem);
      if (!emit_path.empty()) {
        std::ofstream out(emit_path);
        if (!out) throw Error(ErrorKind::data_unreadable, "cannot write '" + emit_path + "'");
        write_problem(out, problem);
      }
      return kOk;
    }
    if (*plot_cmd) {
      std::string title;
      const auto series = read_report_series(report_dir, &title);
      if (series.empty()) throw Error(ErrorKind::data_unreadable, "report has no samples to plot");
      const std::filesystem::path target =
          emit_path.empty() ? std::filesystem::path(report_dir) / "convergence.svg"
                            : std::filesystem::path(emit_path);
      std::ofstream out(target, std::ios::binary);
      if (!out) throw Error(ErrorKind::data_unreadable, "cannot write '" + target.string() + "'");
      out << emit_plot(series, title, per_seed);
      std::cout << "wrote " << target.string() << '\n';
      return kOk;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}
