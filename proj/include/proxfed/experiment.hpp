#ifndef PROXFED_EXPERIMENT_HPP
#define PROXFED_EXPERIMENT_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "proxfed/data.hpp"
#include "proxfed/fedsim.hpp"

namespace proxfed {

enum class ProblemSource { synthetic, libsvm, file };

struct ProblemConfig {
  ProblemSource source = ProblemSource::synthetic;
  SyntheticSpec synthetic;
  std::string path;         // libsvm or problem file
  PartitionSpec partition;  // libsvm
  std::size_t libsvm_dim = 0;
  Regularizer regularizer;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemConfig problem;
  std::vector<AlgorithmConfig> algorithms;
  std::size_t budget = 0;
  std::vector<std::uint64_t> seeds;
  std::size_t record_cadence = 1;
  double eps = 1e-6;
  bool initial_sync = true;
  bool per_seed_lines = false;
  std::size_t threads = 0;  // 0: hardware concurrency
  std::string output_dir = "out";
};

/// Parses and validates a JSON config. Errors are invalid_config except
/// out-of-domain algorithm overrides, which are invalid_override.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& cfg);

const std::vector<std::string>& preset_names();
ExperimentConfig preset(const std::string& name);

FederatedProblem build_problem(const ProblemConfig& cfg);

struct SummaryRow {
  std::string algo;
  std::size_t runs = 0;
  double median = 0.0;  // final squared distance
  double q1 = 0.0;
  double q3 = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  ProblemConstants constants;
  std::size_t num_clients = 0;
  Eigen::Index dim = 0;
  std::vector<RunTrace> runs;  // algorithm-major, then seed, in config order
  std::vector<SummaryRow> summary;
};

/// Type-7 quantile (linear interpolation between order statistics).
double quantile(std::vector<double> values, double prob);

/// Runs every (algorithm, seed) pair on a worker pool; the report does not
/// depend on completion order.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

std::vector<SummaryRow> summarize(const ExperimentConfig& cfg, const std::vector<RunTrace>& runs);

std::string run_file_name(const RunTrace& trace);

/// Writes runs/<algo>_seed<seed>.csv, summary.csv, report.json and
/// convergence.svg under dir.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

struct PlotSeries {
  std::string label;
  /// One (comm_steps, sq_dist) sequence per seed.
  std::vector<std::vector<std::pair<double, double>>> seeds;
};

/// Log-y / linear-x SVG with the median over seeds per series.
std::string emit_plot(const std::vector<PlotSeries>& series, const std::string& title,
                      bool per_seed_lines = false);

/// Reads the per-run CSVs listed in a report directory back into series.
std::vector<PlotSeries> read_report_series(const std::filesystem::path& dir, std::string* title);

std::vector<PlotSeries> series_from_runs(const ExperimentConfig& cfg,
                                         const std::vector<RunTrace>& runs);

}  // namespace proxfed

#endif  // PROXFED_EXPERIMENT_HPP
