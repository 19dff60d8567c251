#include "proxfed/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "proxfed/text.hpp"

namespace proxfed {

namespace {

Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal;
  Matrix g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
  return g;
}

// Haar-distributed orthogonal matrix: QR of a Gaussian with R's diagonal
// signs folded into Q.
Matrix random_orthogonal(Rng& rng, Eigen::Index n) {
  const Matrix g = gaussian_matrix(rng, n, n);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (r(i, i) < 0.0) q.col(i) = -q.col(i);
  }
  return q;
}

Vector log_spaced(double lo, double hi, Eigen::Index n) {
  Vector v(n);
  if (n == 1) {
    v[0] = hi;
    return v;
  }
  const double ratio = std::log(hi / lo);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = lo * std::exp(ratio * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  v[0] = lo;
  v[n - 1] = hi;
  return v;
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

FederatedProblem generate_direct(const SyntheticSpec& spec) {
  const auto d = static_cast<Eigen::Index>(spec.d);
  const std::size_t M = spec.M;
  const double delta = spec.delta_target;
  const Eigen::Index k =
      delta > 0.0 ? static_cast<Eigen::Index>(spec.similarity_rank ? spec.similarity_rank
                                                                   : std::max<std::size_t>(1, spec.d / 2))
                  : 0;
  require(k <= d, ErrorKind::infeasible_spec, "similarity rank exceeds the dimension");
  require(delta == 0.0 || M >= 2, ErrorKind::infeasible_spec, "nonzero delta needs M >= 2");
  require(delta == 0.0 || d >= 2, ErrorKind::infeasible_spec, "nonzero delta needs d >= 2");

  // Largest |eigenvalue| of the scaled reflections; odd M leaves one client
  // unperturbed, which the scale compensates.
  const double s_scale =
      M % 2 == 1 && delta > 0.0 ? std::sqrt(static_cast<double>(M) / static_cast<double>(M - 1))
                                : 1.0;
  const double floor_top = spec.lambda + delta * s_scale;
  require(floor_top <= spec.L_target * (1.0 + 1e-12), ErrorKind::infeasible_spec,
          "infeasible synthetic spec: lambda + delta" +
              std::string(s_scale != 1.0 ? " * sqrt(M/(M-1))" : "") + " = " +
              format_double(floor_top) + " exceeds L_target = " + format_double(spec.L_target) +
              "; clients would lose strong convexity lambda");

  Rng rng(spec.seed);
  const Matrix q = random_orthogonal(rng, d);
  Vector eig = log_spaced(spec.lambda, spec.L_target, d);
  for (Eigen::Index i = d - k; i < d; ++i) eig[i] = std::max(eig[i], floor_top);
  const Matrix hbar = symmetrized(q * eig.asDiagonal() * q.transpose());
  const Matrix qk = q.rightCols(k);

  std::vector<Matrix> perturb(M, Matrix::Zero(d, d));
  if (delta > 0.0) {
    std::uniform_int_distribution<int> coin(0, 1);
    for (std::size_t j = 0; 2 * j + 1 < M; ++j) {
      const Matrix u = random_orthogonal(rng, k);
      Vector signs(k);
      for (Eigen::Index i = 0; i < k; ++i) signs[i] = coin(rng) ? 1.0 : -1.0;
      const Matrix basis = qk * u;
      const Matrix s = symmetrized(basis * signs.asDiagonal() * basis.transpose()) * s_scale;
      perturb[2 * j] = s;
      perturb[2 * j + 1] = -s;
    }
  }

  std::normal_distribution<double> normal;
  Vector planted(d);
  for (Eigen::Index i = 0; i < d; ++i) planted[i] = normal(rng) / std::sqrt(static_cast<double>(d));

  std::vector<ClientObjective> clients;
  clients.reserve(M);
  for (std::size_t m = 0; m < M; ++m) {
    Matrix h = symmetrized(hbar + delta * perturb[m]);
    Vector noise(d);
    for (Eigen::Index i = 0; i < d; ++i) noise[i] = normal(rng);
    Vector c = -(h * planted) + spec.noise_std * noise;
    const double offset = 0.5 * planted.dot(h * planted);
    clients.push_back(ClientObjective::quadratic(std::move(h), std::move(c), offset, spec.lambda));
  }
  return FederatedProblem(std::move(clients));
}

FederatedProblem generate_data_vectors(const SyntheticSpec& spec) {
  require(spec.n > 0, ErrorKind::infeasible_spec, "data-vector mode needs n > 0 samples per client");
  require(spec.L_target > spec.lambda, ErrorKind::infeasible_spec,
          "data-vector mode needs L_target > lambda");
  const auto d = static_cast<Eigen::Index>(spec.d);
  const auto n = static_cast<Eigen::Index>(spec.n);
  Rng rng(spec.seed);
  const Matrix q = random_orthogonal(rng, d);
  // E[(2/n) Z'Z] = 2 Sigma, so the top of Sigma sits at (L - lambda)/2.
  const double top = (spec.L_target - spec.lambda) / 2.0;
  const Vector var = log_spaced(top * 1e-2, top, d);
  const Matrix root = q * var.cwiseSqrt().asDiagonal();

  std::normal_distribution<double> normal;
  Vector planted(d);
  for (Eigen::Index i = 0; i < d; ++i) planted[i] = normal(rng) / std::sqrt(static_cast<double>(d));

  std::vector<ClientObjective> clients;
  clients.reserve(spec.M);
  for (std::size_t m = 0; m < spec.M; ++m) {
    const Matrix z = gaussian_matrix(rng, n, d) * root.transpose();
    Vector y = z * planted;
    for (Eigen::Index i = 0; i < n; ++i) y[i] += spec.noise_std * normal(rng);
    clients.push_back(ClientObjective::ridge(z.sparseView(), std::move(y), spec.lambda));
  }
  return FederatedProblem(std::move(clients));
}

[[noreturn]] void parse_fail(std::size_t line, std::size_t col, const std::string& msg) {
  throw Error(ErrorKind::parse_error,
              "line " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
}

}  // namespace

FederatedProblem generate_synthetic(const SyntheticSpec& spec) {
  require(spec.M >= 1, ErrorKind::infeasible_spec, "synthetic spec needs M >= 1");
  require(spec.d >= 1 && static_cast<Eigen::Index>(spec.d) <= kMaxDenseDim,
          ErrorKind::infeasible_spec, "synthetic dimension must lie in [1, 512]");
  require(spec.lambda > 0.0, ErrorKind::infeasible_spec, "synthetic spec needs lambda > 0");
  require(spec.L_target >= spec.lambda, ErrorKind::infeasible_spec,
          "synthetic spec needs L_target >= lambda");
  require(spec.delta_target >= 0.0, ErrorKind::infeasible_spec, "delta_target must be >= 0");
  require(spec.delta_target <= spec.L_target, ErrorKind::infeasible_spec,
          "delta_target must not exceed L_target");
  require(spec.noise_std >= 0.0, ErrorKind::infeasible_spec, "noise_std must be >= 0");
  return spec.mode == SyntheticMode::direct_hessian ? generate_direct(spec)
                                                    : generate_data_vectors(spec);
}

LibsvmDataset parse_libsvm(std::istream& in, std::size_t declared_dim) {
  LibsvmDataset data;
  data.dim = declared_dim;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string_view view(line);

    std::vector<std::pair<std::size_t, std::string_view>> tokens;
    std::size_t pos = 0;
    while (pos < view.size()) {
      while (pos < view.size() && (view[pos] == ' ' || view[pos] == '\t')) ++pos;
      if (pos >= view.size()) break;
      const std::size_t start = pos;
      while (pos < view.size() && view[pos] != ' ' && view[pos] != '\t') ++pos;
      tokens.emplace_back(start + 1, view.substr(start, pos - start));
    }
    if (tokens.empty()) continue;

    LibsvmRow row;
    const auto label = parse_double(tokens[0].second);
    if (!label) parse_fail(lineno, tokens[0].first, "non-numeric label '" + std::string(tokens[0].second) + "'");
    if (!std::isfinite(*label)) parse_fail(lineno, tokens[0].first, "non-finite label");
    row.label = *label;

    std::size_t prev = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto [col, tok] = tokens[t];
      const std::size_t colon = tok.find(':');
      if (colon == std::string_view::npos) {
        parse_fail(lineno, col, "expected index:value, got '" + std::string(tok) + "'");
      }
      const std::string_view idx_text = tok.substr(0, colon);
      long long idx = 0;
      const auto res = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), idx);
      if (idx_text.empty() || res.ec != std::errc() || res.ptr != idx_text.data() + idx_text.size()) {
        parse_fail(lineno, col, "non-numeric index '" + std::string(idx_text) + "'");
      }
      if (idx < 1) parse_fail(lineno, col, "index " + std::to_string(idx) + " < 1");
      const auto index = static_cast<std::size_t>(idx);
      if (index <= prev) {
        parse_fail(lineno, col, "index " + std::to_string(index) + " does not increase (previous " +
                                    std::to_string(prev) + ")");
      }
      const auto value = parse_double(tok.substr(colon + 1));
      if (!value) {
        parse_fail(lineno, col + colon + 1,
                   "non-numeric value '" + std::string(tok.substr(colon + 1)) + "'");
      }
      if (!std::isfinite(*value)) parse_fail(lineno, col + colon + 1, "non-finite value");
      row.features.emplace_back(index, *value);
      prev = index;
    }
    if (prev > data.dim) data.dim = prev;
    data.rows.push_back(std::move(row));
  }
  return data;
}

LibsvmDataset load_libsvm(const std::string& path, std::size_t declared_dim) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::data_unreadable, "cannot open data file '" + path + "'");
  return parse_libsvm(in, declared_dim);
}

std::string serialize_libsvm(const LibsvmDataset& data) {
  std::string out;
  for (const auto& row : data.rows) {
    out += format_double(row.label);
    for (const auto& [idx, val] : row.features) {
      out += ' ';
      out += std::to_string(idx);
      out += ':';
      out += format_double(val);
    }
    out += '\n';
  }
  return out;
}

Partition partition(const LibsvmDataset& data, const PartitionSpec& spec) {
  require(!data.rows.empty(), ErrorKind::invalid_argument, "cannot partition an empty dataset");
  require(spec.n_per_client > 0, ErrorKind::invalid_argument, "samples per client must be > 0");
  require(spec.M >= 1, ErrorKind::invalid_argument, "partition needs M >= 1");
  require(data.dim >= 1 && static_cast<Eigen::Index>(data.dim) <= kMaxDenseDim,
          ErrorKind::invalid_argument, "dataset dimension must lie in [1, 512]");
  require(!spec.identity || spec.n_per_client <= data.rows.size(), ErrorKind::invalid_argument,
          "identity partition needs n <= number of rows");

  Rng rng(spec.seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.rows.size() - 1);
  const auto n = static_cast<Eigen::Index>(spec.n_per_client);
  const auto d = static_cast<Eigen::Index>(data.dim);

  std::vector<std::vector<std::size_t>> rows(spec.M);
  std::vector<ClientObjective> clients;
  clients.reserve(spec.M);
  for (std::size_t m = 0; m < spec.M; ++m) {
    rows[m].reserve(spec.n_per_client);
    std::vector<Eigen::Triplet<double>> triplets;
    Vector labels(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t r = spec.identity ? static_cast<std::size_t>(i) : pick(rng);
      rows[m].push_back(r);
      const LibsvmRow& row = data.rows[r];
      labels[i] = spec.remap_labels ? (row.label > 0.0 ? 1.0 : 0.0) : row.label;
      for (const auto& [idx, val] : row.features) {
        triplets.emplace_back(i, static_cast<Eigen::Index>(idx - 1), val);
      }
    }
    SparseRows z(n, d);
    z.setFromTriplets(triplets.begin(), triplets.end());
    clients.push_back(ClientObjective::ridge(std::move(z), std::move(labels), spec.lambda));
  }
  return Partition{FederatedProblem(std::move(clients)), std::move(rows)};
}

void write_problem(std::ostream& out, const FederatedProblem& problem) {
  require(problem.tilt_gamma() == 0.0, ErrorKind::unsupported, "tilted problems are not serializable");
  const Eigen::Index d = problem.dim();
  out << "proxfed-problem 1\n";
  out << "clients " << problem.num_clients() << " dim " << d << '\n';
  const Regularizer& reg = problem.regularizer();
  switch (reg.kind) {
    case RegularizerKind::none: out << "regularizer none\n"; break;
    case RegularizerKind::l1: out << "regularizer l1 " << format_double(reg.weight) << '\n'; break;
    case RegularizerKind::ball: out << "regularizer ball " << format_double(reg.radius) << '\n'; break;
  }
  for (std::size_t m = 0; m < problem.num_clients(); ++m) {
    const ClientObjective& c = problem.client(m);
    out << "client " << m << " mu " << format_double(c.mu()) << " offset "
        << format_double(c.base_offset()) << '\n';
    out << "linear";
    for (Eigen::Index i = 0; i < d; ++i) out << ' ' << format_double(c.base_linear()[i]);
    out << "\nhessian\n";
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        if (j) out << ' ';
        out << format_double(c.base_hessian()(i, j));
      }
      out << '\n';
    }
  }
}

FederatedProblem read_problem(std::istream& in) {
  std::string tok;
  auto next = [&](const char* what) -> std::string {
    if (!(in >> tok)) throw Error(ErrorKind::parse_error, std::string("problem file ended before ") + what);
    return tok;
  };
  auto expect = [&](const char* word) {
    if (next(word) != word) {
      throw Error(ErrorKind::parse_error, std::string("problem file: expected '") + word +
                                              "', got '" + tok + "'");
    }
  };
  auto number = [&](const char* what) -> double {
    const auto v = parse_double(next(what));
    if (!v) throw Error(ErrorKind::parse_error, std::string("problem file: bad number for ") + what + ": '" + tok + "'");
    return *v;
  };
  auto count = [&](const char* what) -> std::size_t {
    const double v = number(what);
    if (!(v >= 0.0) || v != std::floor(v)) {
      throw Error(ErrorKind::parse_error, std::string("problem file: bad count for ") + what);
    }
    return static_cast<std::size_t>(v);
  };

  expect("proxfed-problem");
  if (count("version") != 1) throw Error(ErrorKind::parse_error, "problem file: unsupported version");
  expect("clients");
  const std::size_t M = count("client count");
  expect("dim");
  const auto d = static_cast<Eigen::Index>(count("dimension"));
  require(M >= 1 && d >= 1, ErrorKind::parse_error, "problem file: empty problem");
  expect("regularizer");
  Regularizer reg;
  const std::string kind = next("regularizer kind");
  if (kind == "l1") {
    reg = Regularizer::l1(number("l1 weight"));
  } else if (kind == "ball") {
    reg = Regularizer::ball(number("ball radius"));
  } else if (kind != "none") {
    throw Error(ErrorKind::parse_error, "problem file: unknown regularizer '" + kind + "'");
  }

  std::vector<ClientObjective> clients;
  clients.reserve(M);
  for (std::size_t m = 0; m < M; ++m) {
    expect("client");
    if (count("client index") != m) throw Error(ErrorKind::parse_error, "problem file: clients out of order");
    expect("mu");
    const double mu = number("mu");
    expect("offset");
    const double offset = number("offset");
    expect("linear");
    Vector c(d);
    for (Eigen::Index i = 0; i < d; ++i) c[i] = number("linear term");
    expect("hessian");
    Matrix h(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) h(i, j) = number("hessian entry");
    clients.push_back(ClientObjective::quadratic(std::move(h), std::move(c), offset, mu));
  }
  return FederatedProblem(std::move(clients), reg);
}

}  // namespace proxfed
