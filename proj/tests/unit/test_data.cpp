#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "proxfed/data.hpp"

using namespace proxfed;

namespace {

SyntheticSpec spec(std::size_t M, std::size_t d, double delta, double L, std::uint64_t seed) {
  SyntheticSpec s;
  s.M = M;
  s.d = d;
  s.delta_target = delta;
  s.L_target = L;
  s.lambda = 1.0;
  s.noise_std = 1.0;
  s.seed = seed;
  return s;
}

LibsvmDataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_libsvm(in);
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse_error);
    return e.what();
  }
  FAIL("expected a parse error");
  return {};
}

}  // namespace

TEST_CASE("synthetic generator hits delta and L") {
  const auto p = generate_synthetic(spec(200, 50, 10.0, 3000.0, 2023));
  const auto& k = p.constants();
  CHECK(k.delta >= 9.99);
  CHECK(k.delta <= 10.01);
  CHECK(k.L >= 2970.0);
  CHECK(k.L <= 3030.0);
  CHECK(k.mu == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(k.delta <= k.L);
  CHECK(p.num_clients() == 200);
  CHECK(p.dim() == 50);
}

TEST_CASE("synthetic generator over a grid of targets") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t M = 2 + rng() % 30, d = 2 + rng() % 20;
    const double L = std::exp(fx::uniform(rng, std::log(2.0), std::log(1e4)));
    // feasible: lambda + delta sqrt(M/(M-1)) <= L
    const double delta = fx::uniform(rng, 0.0, (L - 1.0) * std::sqrt((M - 1.0) / M));
    const auto p = generate_synthetic(spec(M, d, delta, L, rng()));
    const auto& k = p.constants();
    CHECK(std::abs(k.delta - delta) <= 1e-3 * delta + 1e-9);
    CHECK(std::abs(k.L - L) <= 0.01 * L);
    CHECK(k.mu > 0.0);
    CHECK(k.delta <= k.L * (1 + 1e-9));
    // the similarity inequality holds with the measured delta
    for (int j = 0; j < 5; ++j) {
      const Vector x = fx::gaussian(d, rng), y = fx::gaussian(d, rng);
      CHECK(similarity_ratio(p, x, y) <= k.delta * k.delta * (1 + 1e-8));
    }
  }
}

TEST_CASE("delta = 0 gives identical Hessians") {
  const auto p = generate_synthetic(spec(5, 6, 0.0, 20.0, 4));
  CHECK(p.constants().delta <= 1e-10);
}

TEST_CASE("infeasible specs are rejected") {
  auto kind = [](const SyntheticSpec& s) {
    try {
      generate_synthetic(s);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::invalid_argument;
  };
  CHECK(kind(spec(10, 5, 20.0, 10.0, 1)) == ErrorKind::infeasible_spec);
  CHECK(kind(spec(1, 5, 2.0, 10.0, 1)) == ErrorKind::infeasible_spec);
  CHECK(kind(spec(10, 1, 2.0, 10.0, 1)) == ErrorKind::infeasible_spec);
  SyntheticSpec s = spec(10, 5, 2.0, 10.0, 1);
  s.lambda = 0.0;
  CHECK(kind(s) == ErrorKind::infeasible_spec);
  s = spec(10, 5, 2.0, 0.5, 1);
  CHECK(kind(s) == ErrorKind::infeasible_spec);
  s = spec(10, 600, 2.0, 10.0, 1);
  CHECK(kind(s) == ErrorKind::infeasible_spec);
}

TEST_CASE("generation is deterministic in the seed") {
  const auto a = generate_synthetic(spec(8, 6, 3.0, 30.0, 5));
  const auto b = generate_synthetic(spec(8, 6, 3.0, 30.0, 5));
  const auto c = generate_synthetic(spec(8, 6, 3.0, 30.0, 6));
  for (std::size_t m = 0; m < 8; ++m) {
    CHECK(a.client(m).hessian() == b.client(m).hessian());
    CHECK(a.client(m).linear() == b.client(m).linear());
  }
  CHECK(a.client(0).linear() != c.client(0).linear());
}

TEST_CASE("data-vector mode builds ridge clients") {
  SyntheticSpec s = spec(4, 5, 1.0, 50.0, 3);
  s.mode = SyntheticMode::data_vectors;
  s.n = 40;
  const auto p = generate_synthetic(s);
  CHECK(p.client(0).kind() == ObjectiveKind::dataset_ridge);
  CHECK(p.constants().mu >= 1.0 - 1e-9);
  CHECK(p.constants().delta > 0.0);
}

TEST_CASE("libsvm line") {
  const auto d = parse("+1 3:1 11:1 14:1\n");
  REQUIRE(d.rows.size() == 1);
  CHECK(d.rows[0].label == 1.0);
  CHECK(d.rows[0].features ==
        std::vector<std::pair<std::size_t, double>>{{3, 1.0}, {11, 1.0}, {14, 1.0}});
  CHECK(d.dim == 14);
}

TEST_CASE("libsvm edge cases") {
  CHECK(parse("").rows.empty());
  CHECK(parse("\n\n  \n").rows.empty());
  const auto d = parse("-1\r\n0.5 2:-3.25e-1\t7:2\n");
  REQUIRE(d.rows.size() == 2);
  CHECK(d.rows[0].features.empty());
  CHECK(d.rows[1].label == 0.5);
  CHECK(d.rows[1].features[0].second == -0.325);
  CHECK(d.dim == 7);
  std::istringstream in("1 2:1\n");
  CHECK(parse_libsvm(in, 123).dim == 123);
}

TEST_CASE("libsvm errors carry line and column") {
  CHECK(parse_error("1 2:1\n1 3:x\n").find("line 2:5") != std::string::npos);
  CHECK(parse_error("1 a:1\n").find("line 1:3") != std::string::npos);
  CHECK(parse_error("1 5:1 5:2\n").find("line 1:7") != std::string::npos);
  CHECK(parse_error("1 5:1 3:2\n").find("does not increase") != std::string::npos);
  CHECK(parse_error("1 0:1\n").find("< 1") != std::string::npos);
  CHECK(parse_error("1 -2:1\n").find("line 1:3") != std::string::npos);
  CHECK(parse_error("yes 1:1\n").find("line 1:1") != std::string::npos);
  CHECK(parse_error("1 4\n").find("index:value") != std::string::npos);
  CHECK(parse_error("1 2:1 3:5x\n").find("line 1:9") != std::string::npos);
}

TEST_CASE("libsvm round trip") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    LibsvmDataset d;
    const std::size_t rows = rng() % 20;
    for (std::size_t r = 0; r < rows; ++r) {
      LibsvmRow row;
      row.label = (rng() % 2) ? 1.0 : fx::uniform(rng, -5, 5);
      std::size_t idx = 0;
      const std::size_t nnz = rng() % 8;
      for (std::size_t j = 0; j < nnz; ++j) {
        idx += 1 + rng() % 5;
        row.features.emplace_back(idx, fx::uniform(rng, -1e3, 1e3));
      }
      d.dim = std::max(d.dim, idx);
      d.rows.push_back(std::move(row));
    }
    const std::string text = serialize_libsvm(d);
    CHECK(parse(text) == d);
    CHECK(serialize_libsvm(parse(text)) == text);
  }
}

TEST_CASE("missing file is data_unreadable") {
  try {
    load_libsvm("/nonexistent/a9a");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::data_unreadable);
  }
}

TEST_CASE("partition") {
  const auto d = parse("1 1:1 2:0.5\n-1 2:1 3:2\n1 1:-1 3:1\n-1 1:0.3\n");
  PartitionSpec ps;
  ps.M = 1;
  ps.n_per_client = 4;
  ps.lambda = 0.1;
  ps.identity = true;
  const Partition one = partition(d, ps);
  CHECK(one.rows[0] == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(one.problem.constants().delta == 0.0);

  ps.M = 3;
  const Partition same = partition(d, ps);
  CHECK(same.problem.constants().delta <= 1e-12);

  ps.identity = false;
  ps.seed = 11;
  ps.n_per_client = 3;
  const Partition a = partition(d, ps), b = partition(d, ps);
  CHECK(a.rows == b.rows);
  for (const auto& r : a.rows) {
    CHECK(r.size() == 3);
    for (std::size_t i : r) CHECK(i < 4);
  }
  const auto& c = a.problem.client(0);
  CHECK(c.kind() == ObjectiveKind::dataset_ridge);
  CHECK(c.lambda() == 0.1);
  // raw labels by default, remapped on request
  CHECK((*c.labels())[0] == d.rows[a.rows[0][0]].label);
  ps.remap_labels = true;
  const Partition r = partition(d, ps);
  for (Eigen::Index i = 0; i < r.problem.client(0).labels()->size(); ++i) {
    const double y = (*r.problem.client(0).labels())[i];
    CHECK((y == 0.0 || y == 1.0));
  }
  CHECK(a.problem.constants().mu >= 0.1 - 1e-12);
}

TEST_CASE("problem file round trip") {
  const auto p = fx::random_problem(3, 4, 0.5, 6.0, 12).with_regularizer(Regularizer::l1(0.25));
  std::ostringstream out;
  write_problem(out, p);
  std::istringstream in(out.str());
  const FederatedProblem q = read_problem(in);
  REQUIRE(q.num_clients() == 3);
  for (std::size_t m = 0; m < 3; ++m) {
    CHECK(q.client(m).hessian() == p.client(m).hessian());
    CHECK(q.client(m).linear() == p.client(m).linear());
  }
  CHECK(q.regularizer().kind == RegularizerKind::l1);
  std::ostringstream again;
  write_problem(again, q);
  CHECK(again.str() == out.str());

  std::istringstream bad("proxfed-problem 7\n");
  CHECK_THROWS_AS(read_problem(bad), Error);
}
