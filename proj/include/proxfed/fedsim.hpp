#ifndef PROXFED_FEDSIM_HPP
#define PROXFED_FEDSIM_HPP

#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "proxfed/catalyst.hpp"
#include "proxfed/optim.hpp"
#include "proxfed/text.hpp"

namespace proxfed {

enum class Algorithm { sppm, svrp, svrp_composite, sgd, lsvrg, scaffold, catalyst };

const char* to_string(Algorithm algo);
Algorithm parse_algorithm(const std::string& name);
const std::vector<Algorithm>& all_algorithms();

enum class EventKind {
  send_model,
  return_model,
  broadcast_anchor,
  upload_gradient,
  broadcast_full_gradient,
  notify,
  broadcast_center,  // Catalyst: y_{t-1} sent to every client at an outer step
};

const char* to_string(EventKind kind);

inline constexpr std::size_t kAllClients = std::numeric_limits<std::size_t>::max();

struct CommEvent {
  std::size_t step = 0;  // iteration index; initial sync events use 0
  EventKind kind = EventKind::send_model;
  std::size_t client = 0;  // kAllClients for notify
  std::size_t cost = 1;
};

/// Append-only. Events of one iteration are staged and either committed
/// together or dropped.
class CommLedger {
 public:
  explicit CommLedger(bool keep_events = true) : keep_events_(keep_events) {}

  void stage(const CommEvent& e);
  std::size_t staged_cost() const noexcept { return staged_cost_; }
  /// Commits staged events; counts the iteration in the histogram when asked.
  void commit(bool count_iteration = true);
  void discard();

  std::size_t total() const noexcept { return total_; }
  std::size_t event_count() const noexcept { return event_count_; }
  const std::vector<CommEvent>& events() const noexcept { return events_; }
  /// Per-iteration cost -> number of iterations with that cost.
  const std::map<std::size_t, std::size_t>& per_iteration() const noexcept { return histogram_; }

 private:
  bool keep_events_;
  std::vector<CommEvent> events_;
  std::vector<CommEvent> staged_;
  std::size_t staged_cost_ = 0;
  std::size_t staged_count_ = 0;
  std::size_t total_ = 0;
  std::size_t event_count_ = 0;
  std::map<std::size_t, std::size_t> histogram_;
};

/// Overrides; zero / empty means "use the theoretical default".
struct AlgorithmConfig {
  Algorithm algo = Algorithm::svrp;
  std::string label;  // defaults to to_string(algo)
  double eta = 0.0;
  double p = 0.0;
  std::optional<double> b;
  ProxMethod prox_method = ProxMethod::exact;
  std::size_t max_inner_iters = 0;
};

/// Parameters actually used by a run.
struct ResolvedParams {
  double eta = 0.0;
  double p = 1.0;
  double b = 0.0;
  ProxMethod prox_method = ProxMethod::exact;
  std::size_t max_inner_iters = 0;
  std::optional<TheoremParams> theorem;
  std::optional<CatalystParams> catalyst;
};

/// eps is the accuracy the theoretical formulas target; x0 the start point.
ResolvedParams resolve_params(const AlgorithmConfig& cfg, const FederatedProblem& problem,
                              double eps, const Vector& x0);

struct SimOptions {
  std::size_t budget = 0;  // communication steps
  std::uint64_t seed = 0;
  std::size_t record_cadence = 1;  // iterations between samples
  bool keep_events = false;
  bool initial_sync = true;
  double eps = 1e-6;
  std::optional<Vector> x0;  // zero vector when absent
};

struct TraceSample {
  std::size_t comm_steps = 0;
  std::size_t iter = 0;
  double sq_dist = 0.0;
  double subopt = 0.0;
};

struct RunTrace {
  std::string algo;
  std::uint64_t seed = 0;
  std::vector<TraceSample> samples;
  Vector final_x;
  std::size_t iterations = 0;
  double wall_seconds = 0.0;
  CommLedger ledger{false};
  ResolvedParams params;
  std::vector<std::string> warnings;
};

/// Drives the step functions while the ledger stays within budget. An
/// iteration is atomic: its new state is computed, and if its events would
/// push the ledger past the budget the iteration is dropped and the run ends.
RunTrace simulate(const AlgorithmConfig& cfg, const FederatedProblem& problem,
                  const SimOptions& opts);

/// 2 + 3pM for the anchor-based methods, 2 for SPPM and SGD, 4 for SCAFFOLD.
double expected_comm_per_iter(Algorithm algo, double p, std::size_t M);

/// 3M: anchor broadcast, gradient uploads, full-gradient broadcast.
std::size_t initial_sync_cost(std::size_t M);
/// 0 for methods without an anchor round.
std::size_t initial_sync_cost(Algorithm algo, std::size_t M, double catalyst_gamma = 0.0);

void write_trace_header(std::ostream& out);
void write_trace_rows(std::ostream& out, const RunTrace& trace);

}  // namespace proxfed

#endif  // PROXFED_FEDSIM_HPP
