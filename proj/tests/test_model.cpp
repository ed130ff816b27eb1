#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "mrflab/exact.hpp"
#include "mrflab/model.hpp"
#include "test_support.hpp"

using namespace mrflab;
using mrflab::testing::chi2_critical_95;
using mrflab::testing::random_theta;

namespace {

Configuration draw_exact(const Eigen::VectorXd& probs, int d, Rng& rng) {
  std::discrete_distribution<unsigned long long> pick(probs.data(), probs.data() + probs.size());
  return configuration_from_index(pick(rng), d);
}

unsigned long long index_of(const Configuration& x) {
  unsigned long long idx = 0;
  for (std::size_t v = 0; v < x.size(); ++v) idx |= static_cast<unsigned long long>(x[v]) << v;
  return idx;
}

double chi2_statistic(const std::vector<long>& counts, const Eigen::VectorXd& probs, long total) {
  double stat = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const double expected = probs[i] * static_cast<double>(total);
    stat += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  return stat;
}

}  // namespace

TEST_CASE("grid sizes") {
  CHECK(build_grid(4, 4).num_nodes() == 16);
  CHECK(build_grid(4, 4).num_params() == 24);
  CHECK(build_grid(6, 6).num_params() == 60);
  CHECK(build_grid(8, 8).num_params() == 112);
  const GridSpec pair = build_grid(1, 2);
  CHECK(pair.num_nodes() == 2);
  CHECK(pair.num_params() == 1);
  for (int r = 1; r <= 7; ++r) {
    for (int c = 1; c <= 7; ++c) {
      if (r * c < 2) continue;
      CHECK(build_grid(r, c).num_params() == r * (c - 1) + (r - 1) * c);
    }
  }
}

TEST_CASE("grid rejects degenerate shapes") {
  CHECK_THROWS_AS(build_grid(0, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(3, -1), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(1, 1), std::invalid_argument);
}

TEST_CASE("canonical edge order puts horizontal edges first") {
  const GridSpec g = build_grid(2, 2);
  REQUIRE(g.num_params() == 4);
  CHECK(g.edges()[0].u == 0);
  CHECK(g.edges()[0].v == 1);
  CHECK(g.edges()[1].u == 2);
  CHECK(g.edges()[1].v == 3);
  CHECK(g.edges()[2].u == 0);
  CHECK(g.edges()[2].v == 2);
  CHECK(g.edges()[3].u == 1);
  CHECK(g.edges()[3].v == 3);
  CHECK(g.edge_between(3, 1) == 3);
  CHECK(g.edge_between(0, 3) == -1);
}

TEST_CASE("edges join adjacent nodes without duplicates") {
  const GridSpec g = build_grid(5, 3);
  std::set<std::pair<int, int>> seen;
  for (const Edge& e : g.edges()) {
    CHECK(e.u < e.v);
    const int ru = e.u / 3, cu = e.u % 3, rv = e.v / 3, cv = e.v % 3;
    CHECK(std::abs(ru - rv) + std::abs(cu - cv) == 1);
    CHECK(seen.insert({e.u, e.v}).second);
  }
  int degree_sum = 0;
  for (int v = 0; v < g.num_nodes(); ++v) degree_sum += static_cast<int>(g.neighbors(v).size());
  CHECK(degree_sum == 2 * g.num_params());
}

TEST_CASE("unnormalized log probability examples") {
  const GridSpec pair = build_grid(1, 2);
  const ThetaVector t = ThetaVector::Constant(1, 0.7);
  CHECK(unnormalized_log_prob({0, 0}, t, pair) == doctest::Approx(std::log(0.7)).epsilon(1e-15));
  CHECK(unnormalized_log_prob({0, 1}, t, pair) == doctest::Approx(std::log(0.3)).epsilon(1e-15));
  const GridSpec square = build_grid(2, 2);
  CHECK(unnormalized_log_prob({0, 0, 0, 0}, ThetaVector::Constant(4, 0.7), square) ==
        doctest::Approx(4.0 * std::log(0.7)).epsilon(1e-15));
}

TEST_CASE("unnormalized log probability rejects bad input") {
  const GridSpec square = build_grid(2, 2);
  CHECK_THROWS_AS(unnormalized_log_prob({0, 0, 0}, ThetaVector::Constant(4, 0.7), square),
                  std::invalid_argument);
  CHECK_THROWS_AS(unnormalized_log_prob({0, 0, 0, 0}, ThetaVector::Constant(3, 0.7), square),
                  std::invalid_argument);
  ThetaVector bad = ThetaVector::Constant(4, 0.7);
  bad[2] = 1.0;
  CHECK_THROWS_AS(unnormalized_log_prob({0, 0, 0, 0}, bad, square), std::domain_error);
}

TEST_CASE("log probability is linear in the agreement statistics") {
  Rng rng(11);
  const GridSpec g = build_grid(3, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const ThetaVector theta = random_theta(g.num_params(), rng);
    const Configuration x = random_configuration(g, rng);
    const Eigen::VectorXd w = logit(theta);
    const double expected = edge_agreement(x, g).dot(w) + (1.0 - theta.array()).log().sum();
    CHECK(std::abs(unnormalized_log_prob(x, theta, g) - expected) < 1e-12);
  }
}

TEST_CASE("global bit flip leaves the log probability unchanged") {
  Rng rng(12);
  const GridSpec g = build_grid(4, 3);
  for (int trial = 0; trial < 50; ++trial) {
    const ThetaVector theta = random_theta(g.num_params(), rng);
    Configuration x = random_configuration(g, rng);
    const double before = unnormalized_log_prob(x, theta, g);
    for (auto& b : x) b ^= 1;
    CHECK(unnormalized_log_prob(x, theta, g) == before);
  }
}

TEST_CASE("sufficient statistics") {
  const GridSpec pair = build_grid(1, 2);
  const SufficientStats s = sufficient_stats(Dataset{{{0, 0}, {0, 1}, {1, 1}}}, pair);
  CHECK(s.n == 3);
  CHECK(s.agree[0] == 2);

  const GridSpec g = build_grid(3, 3);
  const Dataset zeros{std::vector<Configuration>(7, Configuration(9, 0))};
  const SufficientStats z = sufficient_stats(zeros, g);
  CHECK(z.n == 7);
  CHECK((z.agree.array() == 7).all());

  // Checkerboard on 2x2: every edge disagrees.
  const GridSpec square = build_grid(2, 2);
  const SufficientStats c = sufficient_stats(Dataset{{{0, 1, 1, 0}}}, square);
  CHECK((c.agree.array() == 0).all());
}

TEST_CASE("sufficient statistics match a per-edge recount") {
  Rng rng(13);
  const GridSpec g = build_grid(3, 4);
  Dataset data;
  for (int i = 0; i < 40; ++i) data.points.push_back(random_configuration(g, rng));
  const SufficientStats s = sufficient_stats(data, g);
  // Independent walk over lattice neighbours: right, then down.
  std::vector<int> expected;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c + 1 < 4; ++c) {
      int count = 0;
      for (const auto& x : data.points) count += x[r * 4 + c] == x[r * 4 + c + 1];
      expected.push_back(count);
    }
  for (int r = 0; r + 1 < 3; ++r)
    for (int c = 0; c < 4; ++c) {
      int count = 0;
      for (const auto& x : data.points) count += x[r * 4 + c] == x[(r + 1) * 4 + c];
      expected.push_back(count);
    }
  REQUIRE(static_cast<int>(expected.size()) == g.num_params());
  for (int j = 0; j < g.num_params(); ++j) {
    CHECK(s.agree[j] == expected[j]);
    CHECK(s.agree[j] >= 0);
    CHECK(s.agree[j] <= s.n);
  }
}

TEST_CASE("single-edge Gibbs conditional") {
  const GridSpec pair = build_grid(1, 2);
  const ThetaVector theta = ThetaVector::Constant(1, 0.7);
  Rng rng(14);
  const int trials = 40000;
  int agree = 0;
  for (int i = 0; i < trials; ++i) {
    const std::uint8_t neighbor = static_cast<std::uint8_t>(i & 1);
    Configuration x{0, neighbor};
    gibbs_sweep(x, theta, pair, rng);
    // Node 0 is resampled first, given the untouched node 1.
    agree += x[0] == neighbor;
  }
  const double rate = static_cast<double>(agree) / trials;
  const double se = std::sqrt(0.21 / trials);
  CHECK(std::abs(rate - 0.7) < 4.0 * se);
}

TEST_CASE("flat potentials resample each site uniformly") {
  const GridSpec g = build_grid(2, 3);
  const ThetaVector theta = ThetaVector::Constant(g.num_params(), 0.5);
  Rng rng(15);
  const int trials = 20000;
  std::vector<int> ones(6, 0);
  for (int i = 0; i < trials; ++i) {
    Configuration x(6, 1);
    gibbs_sweep(x, theta, g, rng);
    for (int v = 0; v < 6; ++v) ones[v] += x[v];
  }
  const double se = std::sqrt(0.25 / trials);
  for (int v = 0; v < 6; ++v) CHECK(std::abs(ones[v] / static_cast<double>(trials) - 0.5) < 4.0 * se);
}

TEST_CASE("long-run Gibbs agreement frequencies match enumeration") {
  const GridSpec g = build_grid(2, 2);
  const ThetaVector theta = (ThetaVector(4) << 0.6, 0.75, 0.55, 0.8).finished();
  const ModelMoments exact = exact_model_moments(theta, g);
  Rng rng(16);
  Configuration x = random_configuration(g, rng);
  const int sweeps = 200000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(4);
  for (int t = 0; t < sweeps; ++t) {
    gibbs_sweep(x, theta, g, rng);
    sum += edge_agreement(x, g);
  }
  const Eigen::VectorXd freq = sum / sweeps;
  // Successive sweeps are correlated; allow a generous multiple of the iid SE.
  for (int j = 0; j < 4; ++j) {
    const double se = std::sqrt(exact.cov(j, j) / sweeps);
    CHECK(std::abs(freq[j] - exact.mean[j]) < 10.0 * se);
  }
}

TEST_CASE("one Gibbs sweep preserves the exact distribution") {
  const GridSpec g = build_grid(2, 2);
  const ThetaVector theta = (ThetaVector(4) << 0.65, 0.3, 0.8, 0.55).finished();
  const Eigen::VectorXd probs = enumerate_probabilities(theta, g);
  Rng rng(17);
  const long draws = 100000;
  std::vector<long> counts(16, 0);
  for (long i = 0; i < draws; ++i) {
    Configuration x = draw_exact(probs, 4, rng);
    gibbs_sweep(x, theta, g, rng);
    ++counts[index_of(x)];
  }
  CHECK(chi2_statistic(counts, probs, draws) < chi2_critical_95(15));
  double tv = 0.0;
  for (int i = 0; i < 16; ++i) tv += std::abs(counts[i] / static_cast<double>(draws) - probs[i]);
  CHECK(0.5 * tv < 0.01);
}

TEST_CASE("sample_dataset") {
  const GridSpec pair = build_grid(1, 2);
  Rng rng(18);
  const Dataset one = sample_dataset(ThetaVector::Constant(1, 0.7), pair, 1, rng);
  REQUIRE(one.size() == 1);
  CHECK(one.points[0].size() == 2);

  const int n = 20000;
  const Dataset data = sample_dataset(ThetaVector::Constant(1, 0.7), pair, n, rng, {100, 2});
  const double rate = sufficient_stats(data, pair).agree[0] / static_cast<double>(n);
  CHECK(std::abs(rate - 0.7) < 4.0 * std::sqrt(0.21 / n));

  CHECK_THROWS(sample_dataset(ThetaVector::Constant(1, 0.7), pair, 5, rng, {-1, 1}));
}

TEST_CASE("coalesced sampler with flat potentials meets after one sweep") {
  const GridSpec g = build_grid(3, 3);
  Rng rng(19);
  const CoalescedSample s = coalesced_sample(ThetaVector::Constant(g.num_params(), 0.5), g, rng, 100);
  CHECK(s.coalesced);
  CHECK(s.sweeps_used == 1);
  CHECK(s.state.size() == 9u);
}

TEST_CASE("coalescence on 4x4 within 1000 sweeps") {
  const GridSpec g = build_grid(4, 4);
  Rng rng(20);
  const int runs = 200;
  int met = 0;
  for (int i = 0; i < runs; ++i) {
    const ThetaVector theta = random_theta(g.num_params(), rng, 0.5, 0.8);
    met += coalesced_sample(theta, g, rng, 1000).coalesced;
  }
  CHECK(met >= 198);
}

TEST_CASE("coalesced draws follow the exact distribution") {
  const GridSpec g = build_grid(2, 2);
  const ThetaVector theta = (ThetaVector(4) << 0.7, 0.6, 0.8, 0.55).finished();
  const Eigen::VectorXd probs = enumerate_probabilities(theta, g);
  Rng rng(21);
  const long draws = 100000;
  std::vector<long> counts(16, 0);
  for (long i = 0; i < draws; ++i) {
    const CoalescedSample s = coalesced_sample(theta, g, rng, 1000);
    REQUIRE(s.coalesced);
    ++counts[index_of(s.state)];
  }
  CHECK(chi2_statistic(counts, probs, draws) < chi2_critical_95(15));
}

TEST_CASE("coalesced sampler outside the attractive regime falls back") {
  const GridSpec g = build_grid(2, 2);
  Rng rng(22);
  const CoalescedSample s = coalesced_sample((ThetaVector(4) << 0.7, 0.4, 0.8, 0.55).finished(), g, rng, 50);
  CHECK_FALSE(s.coalesced);
  CHECK(s.sweeps_used == 50);
  CHECK(s.state.size() == 4u);
}

TEST_CASE("dataset round trip") {
  const GridSpec g = build_grid(2, 3);
  Rng rng(23);
  Dataset data;
  for (int i = 0; i < 9; ++i) data.points.push_back(random_configuration(g, rng));
  std::stringstream buffer;
  write_dataset(buffer, data, g);
  const std::string text = buffer.str();
  CHECK(text.substr(0, text.find('\n')) == "2 3 9");
  const LoadedDataset loaded = read_dataset(buffer);
  CHECK(loaded.grid == g);
  CHECK(loaded.data.points == data.points);
}

TEST_CASE("malformed datasets are rejected") {
  std::istringstream bad_header("2 x 1\n000000\n");
  CHECK_THROWS_AS(read_dataset(bad_header), std::runtime_error);
  std::istringstream truncated("1 2 3\n01\n10\n");
  CHECK_THROWS_AS(read_dataset(truncated), std::runtime_error);
  std::istringstream wrong_width("1 2 1\n010\n");
  CHECK_THROWS_AS(read_dataset(wrong_width), std::runtime_error);
  std::istringstream non_binary("1 2 1\n02\n");
  CHECK_THROWS_AS(read_dataset(non_binary), std::runtime_error);
}

TEST_CASE("logit and inverse") {
  CHECK(logit(0.5) == 0.0);
  CHECK(inv_logit(logit(0.73)) == doctest::Approx(0.73).epsilon(1e-14));
  const ThetaVector theta = (ThetaVector(3) << 0.1, 0.5, 0.9).finished();
  CHECK((inv_logit(logit(theta)) - theta).cwiseAbs().maxCoeff() < 1e-15);
}
