#ifndef PROXFED_TYPES_HPP
#define PROXFED_TYPES_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace proxfed {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One seeded generator per run. Draw order inside a step is fixed:
/// client index first, then the communication coin.
using Rng = std::mt19937_64;

enum class ErrorKind {
  dimension_mismatch,
  invalid_argument,
  unsupported,
  no_minimizer,
  infeasible_spec,
  parse_error,
  data_unreadable,
  invalid_config,
  invalid_override,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind);

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) throw Error(kind, msg);
}

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw Error(ErrorKind::dimension_mismatch,
                std::string(what) + ": expected dimension " + std::to_string(want) +
                    ", got " + std::to_string(got));
  }
}

/// Uniform client index in [0, num_clients).
inline std::size_t sample_client(Rng& rng, std::size_t num_clients) {
  std::uniform_int_distribution<std::size_t> pick(0, num_clients - 1);
  return pick(rng);
}

/// Bernoulli(p). Always consumes exactly one draw; p = 1 always succeeds.
inline bool flip_coin(Rng& rng, double p) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return u < p;
}

}  // namespace proxfed

#endif  // PROXFED_TYPES_HPP
