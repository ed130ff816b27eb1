#include "mrflab/baselines_sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mrflab {

namespace {

void check_pool(const ParticlePool& pool) {
  if (pool.particles.empty()) throw std::invalid_argument("particle pool is empty");
}

// Forward-coupled chains from the two extreme states; true once they meet.
bool extremes_meet(const Eigen::VectorXd& w, const GridSpec& grid, int sweeps, Rng& rng) {
  const int d = grid.num_nodes();
  Configuration lower(static_cast<std::size_t>(d), 0);
  Configuration upper(static_cast<std::size_t>(d), 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < sweeps; ++t) {
    for (int v = 0; v < d; ++v) {
      const double u = unif(rng);
      lower[v] = u < inv_logit(site_log_odds(lower, v, w, grid)) ? 1 : 0;
      upper[v] = u < inv_logit(site_log_odds(upper, v, w, grid)) ? 1 : 0;
    }
    if (lower == upper) return true;
  }
  return false;
}

}  // namespace

double log_mean_exp(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("log_mean_exp of an empty set");
  const double max = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(max)) return max;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max);
  return max + std::log(sum) - std::log(static_cast<double>(values.size()));
}

std::vector<double> log_weight_ratios(const ParticlePool& pool, const ThetaVector& numer,
                                      const ThetaVector& denom, const GridSpec& grid) {
  check_pool(pool);
  check_theta(numer, grid);
  check_theta(denom, grid);
  // log P~(x; a) - log P~(x; b) = sum_j s_j (log a_j - log b_j) + (1 - s_j)(log(1-a_j) - log(1-b_j))
  const Eigen::VectorXd agree_diff = numer.array().log() - denom.array().log();
  const Eigen::VectorXd disagree_diff = (1.0 - numer.array()).log() - (1.0 - denom.array()).log();
  std::vector<double> out;
  out.reserve(pool.size());
  for (const Configuration& x : pool.particles) {
    out.push_back(unnormalized_log_prob(x, agree_diff, disagree_diff, grid));
  }
  return out;
}

ParticlePool make_pool(const ThetaVector& theta, const GridSpec& grid, int s, int advance_sweeps,
                       Rng& rng) {
  check_theta(theta, grid);
  if (s < 1) throw std::invalid_argument("pool needs at least one particle");
  if (advance_sweeps < 0) throw std::invalid_argument("advance_sweeps must be >= 0");
  const Eigen::VectorXd w = logit(theta);
  ParticlePool pool;
  pool.current_theta = theta;
  pool.particles.reserve(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) {
    Configuration x = random_configuration(grid, rng);
    for (int t = 0; t < advance_sweeps; ++t) gibbs_sweep_logit(x, w, grid, rng);
    pool.particles.push_back(std::move(x));
  }
  if ((theta.array() >= 0.5).all() && advance_sweeps > 0) {
    pool.coalesced = extremes_meet(w, grid, advance_sweeps, rng);
  }
  return pool;
}

double estimate_log_ratio_is_geometric(const ThetaVector& theta, const ThetaVector& theta_star,
                                       const ParticlePool& pool_theta,
                                       const ParticlePool& pool_theta_star, const GridSpec& grid) {
  std::vector<double> numer = log_weight_ratios(pool_theta_star, theta, theta_star, grid);
  std::vector<double> denom = log_weight_ratios(pool_theta, theta_star, theta, grid);
  for (double& v : numer) v *= 0.5;
  for (double& v : denom) v *= 0.5;
  return log_mean_exp(numer) - log_mean_exp(denom);
}

double estimate_log_ratio_auxvar(const ThetaVector& theta, const ThetaVector& theta_star,
                                 const ThetaVector& theta_ref, const ParticlePool& pool_theta,
                                 const ParticlePool& pool_theta_star, const GridSpec& grid) {
  // E_{theta_star}[P~(x; ref) / P~(x; theta_star)] = Z(ref) / Z(theta_star), and
  // likewise for theta, so the quotient below estimates Z(theta) / Z(theta_star).
  const double numer = log_mean_exp(log_weight_ratios(pool_theta_star, theta_ref, theta_star, grid));
  const double denom = log_mean_exp(log_weight_ratios(pool_theta, theta_ref, theta, grid));
  return numer - denom;
}

double estimate_log_ratio_exchange(const ThetaVector& theta, const ThetaVector& theta_star,
                                   const ParticlePool& pool_theta_star, const GridSpec& grid) {
  return log_mean_exp(log_weight_ratios(pool_theta_star, theta, theta_star, grid));
}

double persistent_step(ParticlePool& pool, const ThetaVector& theta, const ThetaVector& theta_star,
                       int k, const GridSpec& grid, Rng& rng) {
  check_pool(pool);
  check_theta(theta_star, grid);
  if (k < 1) throw std::invalid_argument("persistent_step needs k >= 1");
  const Eigen::VectorXd w = logit(theta_star);
  for (Configuration& x : pool.particles) {
    for (int t = 0; t < k; ++t) gibbs_sweep_logit(x, w, grid, rng);
  }
  pool.current_theta = theta_star;
  pool.coalesced = false;
  return estimate_log_ratio_exchange(theta, theta_star, pool, grid);
}

double persistent_step(ParticlePool& pool, const ThetaVector& theta_star, int k,
                       const GridSpec& grid, Rng& rng) {
  const ThetaVector theta = pool.current_theta;
  return persistent_step(pool, theta, theta_star, k, grid, rng);
}

}  // namespace mrflab
