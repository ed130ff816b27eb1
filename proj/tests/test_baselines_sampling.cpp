#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "mrflab/baselines_sampling.hpp"
#include "mrflab/exact.hpp"
#include "test_support.hpp"

using namespace mrflab;
using mrflab::testing::exact_draws;
using mrflab::testing::random_theta;

namespace {

ParticlePool exact_pool(const ThetaVector& theta, const GridSpec& g, int s, Rng& rng) {
  return ParticlePool{exact_draws(theta, g, s, rng), theta, true};
}

ParticlePool resample(const ParticlePool& pool, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  ParticlePool out{{}, pool.current_theta, pool.coalesced};
  out.particles.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) out.particles.push_back(pool.particles[pick(rng)]);
  return out;
}

double exact_log_ratio(const ThetaVector& theta, const ThetaVector& theta_star, const GridSpec& g) {
  return brute_force_log_z(theta, g) - brute_force_log_z(theta_star, g);
}

// Bootstrap standard error of an estimator over two pools.
double bootstrap_se(const std::function<double(const ParticlePool&, const ParticlePool&)>& estimate,
                    const ParticlePool& a, const ParticlePool& b, Rng& rng, int reps = 200) {
  double sum = 0.0, sum_sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    const double v = estimate(resample(a, rng), resample(b, rng));
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / reps;
  return std::sqrt((sum_sq - reps * mean * mean) / (reps - 1));
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

}  // namespace

TEST_CASE("log_mean_exp") {
  CHECK(std::abs(log_mean_exp({0.0, 0.0, 0.0}) - 0.0) < 1e-15);
  CHECK(std::abs(log_mean_exp({std::log(1.0), std::log(3.0)}) - std::log(2.0)) < 1e-15);
  CHECK(std::abs(log_mean_exp({1000.0, 1000.0}) - 1000.0) < 1e-12);
  CHECK(log_mean_exp({-INFINITY, -INFINITY}) == -INFINITY);
  CHECK_THROWS_AS(log_mean_exp({}), std::invalid_argument);
}

TEST_CASE("every estimator is exactly zero at theta_star = theta") {
  Rng rng(71);
  const GridSpec g = build_grid(3, 3);
  const ThetaVector theta = random_theta(g.num_params(), rng, 0.5, 0.8);
  const ThetaVector ref = random_theta(g.num_params(), rng, 0.5, 0.8);
  ParticlePool pool = make_pool(theta, g, 50, 10, rng);
  CHECK(estimate_log_ratio_is_geometric(theta, theta, pool, pool, g) == 0.0);
  CHECK(estimate_log_ratio_auxvar(theta, theta, ref, pool, pool, g) == 0.0);
  CHECK(estimate_log_ratio_exchange(theta, theta, pool, g) == 0.0);
  for (int k : {1, 5}) CHECK(persistent_step(pool, theta, theta, k, g, rng) == 0.0);
}

TEST_CASE("tree models have a zero log ratio") {
  Rng rng(72);
  const GridSpec chain = build_grid(1, 3);
  const ThetaVector theta = (ThetaVector(2) << 0.6, 0.8).finished();
  const ThetaVector theta_star = (ThetaVector(2) << 0.75, 0.55).finished();
  const ParticlePool at_theta = exact_pool(theta, chain, 20000, rng);
  const ParticlePool at_star = exact_pool(theta_star, chain, 20000, rng);
  const auto exch = [&](const ParticlePool&, const ParticlePool& b) {
    return estimate_log_ratio_exchange(theta, theta_star, b, chain);
  };
  const auto is = [&](const ParticlePool& a, const ParticlePool& b) {
    return estimate_log_ratio_is_geometric(theta, theta_star, a, b, chain);
  };
  CHECK(std::abs(exch(at_theta, at_star)) < 3.0 * bootstrap_se(exch, at_theta, at_star, rng));
  CHECK(std::abs(is(at_theta, at_star)) < 3.0 * bootstrap_se(is, at_theta, at_star, rng));

  const GridSpec pair = build_grid(1, 2);
  const ThetaVector a = ThetaVector::Constant(1, 0.6), b = ThetaVector::Constant(1, 0.7);
  const ParticlePool pa = exact_pool(a, pair, 20000, rng), pb = exact_pool(b, pair, 20000, rng);
  const auto is_pair = [&](const ParticlePool& x, const ParticlePool& y) {
    return estimate_log_ratio_is_geometric(a, b, x, y, pair);
  };
  CHECK(std::abs(is_pair(pa, pb)) < 3.0 * bootstrap_se(is_pair, pa, pb, rng));
}

TEST_CASE("estimators are consistent with exact log ratios on 2x2") {
  Rng rng(73);
  const GridSpec g = build_grid(2, 2);
  const ThetaVector theta = (ThetaVector(4) << 0.7, 0.65, 0.6, 0.75).finished();
  ThetaVector theta_star = theta;
  theta_star[0] += 0.02;
  theta_star[2] -= 0.02;
  const ThetaVector ref = (ThetaVector(4) << 0.69, 0.66, 0.62, 0.73).finished();
  const double truth = exact_log_ratio(theta, theta_star, g);
  const ParticlePool at_theta = exact_pool(theta, g, 10000, rng);
  const ParticlePool at_star = exact_pool(theta_star, g, 10000, rng);

  const std::vector<std::pair<const char*, std::function<double(const ParticlePool&, const ParticlePool&)>>> estimators = {
      {"is-geometric",
       [&](const ParticlePool& a, const ParticlePool& b) { return estimate_log_ratio_is_geometric(theta, theta_star, a, b, g); }},
      {"auxvar",
       [&](const ParticlePool& a, const ParticlePool& b) { return estimate_log_ratio_auxvar(theta, theta_star, ref, a, b, g); }},
      {"exch", [&](const ParticlePool&, const ParticlePool& b) { return estimate_log_ratio_exchange(theta, theta_star, b, g); }},
  };
  for (const auto& [name, estimate] : estimators) {
    const double value = estimate(at_theta, at_star);
    const double se = bootstrap_se(estimate, at_theta, at_star, rng);
    INFO(name << ": estimate " << value << " exact " << truth << " se " << se);
    CHECK(std::abs(value - truth) <= 3.0 * se);
  }
}

TEST_CASE("auxvar with the reference at theta reduces to the exchange estimator") {
  Rng rng(74);
  const GridSpec g = build_grid(2, 3);
  const ThetaVector theta = random_theta(g.num_params(), rng, 0.5, 0.8);
  const ThetaVector theta_star = random_theta(g.num_params(), rng, 0.5, 0.8);
  const ParticlePool a = make_pool(theta, g, 64, 20, rng);
  const ParticlePool b = make_pool(theta_star, g, 64, 20, rng);
  // The theta-pool term is a mean of ones, leaving +log of the exchange mean.
  CHECK(std::abs(estimate_log_ratio_auxvar(theta, theta_star, theta, a, b, g) -
                 estimate_log_ratio_exchange(theta, theta_star, b, g)) < 1e-13);
}

TEST_CASE("estimators stay finite across the parameter box") {
  Rng rng(75);
  const GridSpec g = build_grid(3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const ThetaVector theta = random_theta(g.num_params(), rng, 0.01, 0.99);
    const ThetaVector theta_star = random_theta(g.num_params(), rng, 0.01, 0.99);
    const ThetaVector ref = random_theta(g.num_params(), rng, 0.01, 0.99);
    ParticlePool a = make_pool(theta, g, 30, 5, rng);
    const ParticlePool b = make_pool(theta_star, g, 30, 5, rng);
    CHECK(std::isfinite(estimate_log_ratio_is_geometric(theta, theta_star, a, b, g)));
    CHECK(std::isfinite(estimate_log_ratio_auxvar(theta, theta_star, ref, a, b, g)));
    CHECK(std::isfinite(estimate_log_ratio_exchange(theta, theta_star, b, g)));
    CHECK(std::isfinite(persistent_step(a, theta_star, 1, g, rng)));
  }
}

TEST_CASE("persistent step with long advancement matches the exchange estimator in distribution") {
  Rng rng(76);
  const GridSpec g = build_grid(2, 2);
  const ThetaVector theta = (ThetaVector(4) << 0.7, 0.65, 0.6, 0.75).finished();
  const ThetaVector theta_star = (ThetaVector(4) << 0.6, 0.75, 0.7, 0.6).finished();
  const int reps = 200, s = 50;
  std::vector<double> persistent, exchange;
  for (int r = 0; r < reps; ++r) {
    ParticlePool pool = exact_pool(theta, g, s, rng);
    persistent.push_back(persistent_step(pool, theta, theta_star, 500, g, rng));
    CHECK(pool.current_theta == theta_star);
    exchange.push_back(estimate_log_ratio_exchange(theta, theta_star, exact_pool(theta_star, g, s, rng), g));
  }
  // Two-sample KS critical value at the 5% level.
  CHECK(ks_statistic(persistent, exchange) < 1.358 * std::sqrt(2.0 / reps));
}

TEST_CASE("persistent chain tracks exact ratios under small moves") {
  Rng rng(77);
  const GridSpec g = build_grid(2, 2);
  ThetaVector theta = (ThetaVector(4) << 0.7, 0.65, 0.6, 0.75).finished();
  ParticlePool pool = exact_pool(theta, g, 1000, rng);
  std::normal_distribution<double> step(0.0, 0.01);
  int within = 0;
  const int moves = 50;
  for (int m = 0; m < moves; ++m) {
    ThetaVector theta_star = theta;
    for (auto& t : theta_star) t = std::clamp(t + step(rng), 0.51, 0.9);
    const double estimate = persistent_step(pool, theta, theta_star, 1, g, rng);
    const std::vector<double> logw = log_weight_ratios(pool, theta, theta_star, g);
    Eigen::ArrayXd w(static_cast<Eigen::Index>(logw.size()));
    for (std::size_t i = 0; i < logw.size(); ++i) w[static_cast<Eigen::Index>(i)] = std::exp(logw[i]);
    const double rel_se = std::sqrt((w - w.mean()).square().sum() / (w.size() - 1) / w.size()) / w.mean();
    within += std::abs(estimate - exact_log_ratio(theta, theta_star, g)) <= 3.0 * rel_se;
    theta = theta_star;
  }
  // 3 SE covers ~99.7% of honest estimates; allow a couple of misses.
  CHECK(within >= moves - 2);
}

TEST_CASE("make_pool") {
  Rng rng(78);
  const GridSpec pair = build_grid(1, 2);
  const ParticlePool single = make_pool(ThetaVector::Constant(1, 0.7), pair, 1, 10, rng);
  CHECK(single.size() == 1u);
  CHECK(single.current_theta[0] == 0.7);

  const int s = 20000;
  const ParticlePool pool = make_pool(ThetaVector::Constant(1, 0.7), pair, s, 10, rng);
  double agree = 0.0;
  for (const auto& x : pool.particles) agree += x[0] == x[1];
  CHECK(std::abs(agree / s - 0.7) < 4.0 * std::sqrt(0.21 / s));
  CHECK(pool.coalesced);

  const GridSpec g = build_grid(2, 2);
  CHECK_FALSE(make_pool((ThetaVector(4) << 0.7, 0.3, 0.6, 0.6).finished(), g, 5, 10, rng).coalesced);
  CHECK_THROWS_AS(make_pool(ThetaVector::Constant(1, 0.7), pair, 0, 10, rng), std::invalid_argument);
}

TEST_CASE("pool errors") {
  Rng rng(79);
  const GridSpec pair = build_grid(1, 2);
  ParticlePool empty{{}, ThetaVector::Constant(1, 0.6), false};
  const ThetaVector t = ThetaVector::Constant(1, 0.6);
  CHECK_THROWS_AS(estimate_log_ratio_exchange(t, t, empty, pair), std::invalid_argument);
  CHECK_THROWS_AS(estimate_log_ratio_is_geometric(t, t, empty, empty, pair), std::invalid_argument);
  CHECK_THROWS_AS(persistent_step(empty, t, 1, pair, rng), std::invalid_argument);
  ParticlePool one = make_pool(t, pair, 1, 1, rng);
  CHECK_THROWS_AS(persistent_step(one, t, 0, pair, rng), std::invalid_argument);
}
