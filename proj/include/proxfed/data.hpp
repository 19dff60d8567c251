#ifndef PROXFED_DATA_HPP
#define PROXFED_DATA_HPP

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "proxfed/problem.hpp"

namespace proxfed {

/// Dense Gram matrices are materialized per client, so d is capped.
inline constexpr Eigen::Index kMaxDenseDim = 512;

enum class SyntheticMode { direct_hessian, data_vectors };

struct SyntheticSpec {
  SyntheticMode mode = SyntheticMode::direct_hessian;
  std::size_t M = 2;
  std::size_t n = 0;  // samples per client (data_vectors mode)
  std::size_t d = 2;
  double delta_target = 0.0;
  double L_target = 1.0;
  double lambda = 1.0;
  double noise_std = 0.0;
  std::size_t similarity_rank = 0;  // 0: d / 2
  std::uint64_t seed = 0;
};

/// direct_hessian: H_m = Hbar + delta S_m with Hbar = Q diag(e) Q', e
/// log-spaced on [lambda, L_target]; the S_m come in +/- pairs of reflections
/// on a shared rank-k subspace, so sum S_m = 0 and (1/M) sum S_m^2 is a
/// projector. delta, L and mu = lambda come out exact. Linear terms are
/// -H_m x0 + noise for a planted x0 ~ N(0, I/d).
///
/// data_vectors: ridge clients over Gaussian features; delta is measured.
FederatedProblem generate_synthetic(const SyntheticSpec& spec);

struct LibsvmRow {
  double label = 0.0;
  std::vector<std::pair<std::size_t, double>> features;  // 1-based, increasing

  bool operator==(const LibsvmRow&) const = default;
};

struct LibsvmDataset {
  std::vector<LibsvmRow> rows;
  std::size_t dim = 0;  // largest index seen (or declared, if larger)

  bool operator==(const LibsvmDataset&) const = default;
};

/// Lines look like `label idx:val idx:val ...`. Blank lines are skipped and
/// a trailing '\r' is tolerated. Errors carry line:column.
LibsvmDataset parse_libsvm(std::istream& in, std::size_t declared_dim = 0);
LibsvmDataset load_libsvm(const std::string& path, std::size_t declared_dim = 0);

/// Canonical text: one row per line, shortest decimal values, single spaces.
std::string serialize_libsvm(const LibsvmDataset& data);

struct PartitionSpec {
  std::size_t M = 1;
  std::size_t n_per_client = 0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  bool identity = false;      // client m gets rows 0..n-1 in order
  bool remap_labels = false;  // labels > 0 -> 1, others -> 0
};

struct Partition {
  FederatedProblem problem;
  std::vector<std::vector<std::size_t>> rows;  // row indices per client
};

/// Samples n rows per client with replacement and builds ridge clients.
Partition partition(const LibsvmDataset& data, const PartitionSpec& spec);

/// Plain-text problem format (header, then each client's dense Hessian,
/// linear term and offset). Ridge clients are written in quadratic form.
void write_problem(std::ostream& out, const FederatedProblem& problem);
FederatedProblem read_problem(std::istream& in);

}  // namespace proxfed

#endif  // PROXFED_DATA_HPP
