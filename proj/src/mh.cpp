#include "mrflab/mh.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "mrflab/exact.hpp"

namespace mrflab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool same_point(const ThetaVector& a, const ThetaVector& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

// Post-burn-in step count, floor(steps (1 - burn_in_fraction)), guarded
// against products like 10 * 0.19999999999999996.
long kept_steps(const MhConfig& config) {
  return static_cast<long>(std::floor(config.steps * (1.0 - config.burn_in_fraction) + 1e-9));
}

}  // namespace

void check_mh_config(const MhConfig& config) {
  if (config.steps < 1) throw std::invalid_argument("MH steps must be positive");
  if (!(config.sigma_q2 > 0.0)) throw std::invalid_argument("proposal variance must be positive");
  if (!(config.prior_low >= 0.0 && config.prior_low < config.prior_high && config.prior_high <= 1.0)) {
    throw std::invalid_argument("prior support must satisfy 0 <= low < high <= 1");
  }
  if (!(config.burn_in_fraction >= 0.0 && config.burn_in_fraction < 1.0)) {
    throw std::invalid_argument("burn_in_fraction must lie in [0, 1)");
  }
  if (config.thin < 1) throw std::invalid_argument("thin must be positive");
}

double LikelihoodStrategy::cached(const ThetaVector& theta) {
  for (const auto& slot : slots_) {
    if (slot && same_point(slot->theta, theta)) return slot->value;
  }
  const double value = log_likelihood(theta);
  slots_[next_slot_] = Slot{theta, value};
  next_slot_ ^= 1;
  return value;
}

double LikelihoodStrategy::log_ratio(const ThetaVector& theta, const ThetaVector& theta_star) {
  const double current = cached(theta);
  return cached(theta_star) - current;
}

ExactLikelihoodStrategy::ExactLikelihoodStrategy(SufficientStats stats, GridSpec grid)
    : stats_(std::move(stats)), grid_(std::move(grid)) {
  if (std::min(grid_.rows(), grid_.cols()) > kMaxRecursionWidth) {
    throw std::invalid_argument("exact likelihood: grid exceeds the recursion window limit");
  }
}

double ExactLikelihoodStrategy::log_likelihood(const ThetaVector& theta) const {
  return exact_log_likelihood(stats_, theta, grid_);
}

MleLikelihoodStrategy::MleLikelihoodStrategy(MleLikelihoodModel model) : model_(std::move(model)) {}

double MleLikelihoodStrategy::log_likelihood(const ThetaVector& theta) const {
  return log_joint_likelihood(theta, model_);
}

PseudoLikelihoodStrategy::PseudoLikelihoodStrategy(Dataset data, GridSpec grid)
    : data_(std::move(data)), grid_(std::move(grid)) {}

double PseudoLikelihoodStrategy::log_likelihood(const ThetaVector& theta) const {
  return log_pseudolikelihood(data_, theta, grid_);
}

LaplaceLikelihoodStrategy::LaplaceLikelihoodStrategy(LaplaceModel model, SufficientStats stats)
    : model_(std::move(model)), stats_(std::move(stats)) {}

double LaplaceLikelihoodStrategy::log_likelihood(const ThetaVector& theta) const {
  return log_laplace_likelihood(theta, model_, stats_);
}

PartitionRatioStrategy::PartitionRatioStrategy(SufficientStats stats, GridSpec grid)
    : stats_(std::move(stats)), grid_(std::move(grid)) {
  if (stats_.agree.size() != grid_.num_params()) {
    throw std::invalid_argument("sufficient statistics do not match grid");
  }
}

double PartitionRatioStrategy::log_ratio(const ThetaVector& theta, const ThetaVector& theta_star) {
  check_theta(theta, grid_);
  check_theta(theta_star, grid_);
  const Eigen::ArrayXd a = stats_.agree.cast<double>().array();
  const double n = stats_.n;
  const double data_term =
      (a * (theta_star.array().log() - theta.array().log()) +
       (n - a) * ((1.0 - theta_star.array()).log() - (1.0 - theta.array()).log()))
          .sum();
  if (stats_.n == 0) return data_term;
  return data_term + n * log_partition_ratio(theta, theta_star);
}

IsGeometricStrategy::IsGeometricStrategy(SufficientStats stats, GridSpec grid, PoolSettings pools)
    : PartitionRatioStrategy(std::move(stats), std::move(grid)), pools_(pools), rng_(pools.seed) {}

double IsGeometricStrategy::log_partition_ratio(const ThetaVector& theta, const ThetaVector& theta_star) {
  const ParticlePool at_theta = make_pool(theta, grid(), pools_.particles, pools_.advance_sweeps, rng_);
  const ParticlePool at_star = make_pool(theta_star, grid(), pools_.particles, pools_.advance_sweeps, rng_);
  return estimate_log_ratio_is_geometric(theta, theta_star, at_theta, at_star, grid());
}

AuxVarStrategy::AuxVarStrategy(SufficientStats stats, GridSpec grid, ThetaVector theta_ref,
                               PoolSettings pools)
    : PartitionRatioStrategy(std::move(stats), std::move(grid)),
      theta_ref_(std::move(theta_ref)),
      pools_(pools),
      rng_(pools.seed) {
  check_theta(theta_ref_, this->grid());
}

double AuxVarStrategy::log_partition_ratio(const ThetaVector& theta, const ThetaVector& theta_star) {
  const ParticlePool at_theta = make_pool(theta, grid(), pools_.particles, pools_.advance_sweeps, rng_);
  const ParticlePool at_star = make_pool(theta_star, grid(), pools_.particles, pools_.advance_sweeps, rng_);
  return estimate_log_ratio_auxvar(theta, theta_star, theta_ref_, at_theta, at_star, grid());
}

ExchangeStrategy::ExchangeStrategy(SufficientStats stats, GridSpec grid, PoolSettings pools)
    : PartitionRatioStrategy(std::move(stats), std::move(grid)), pools_(pools), rng_(pools.seed) {}

double ExchangeStrategy::log_partition_ratio(const ThetaVector& theta, const ThetaVector& theta_star) {
  const ParticlePool at_star = make_pool(theta_star, grid(), pools_.particles, pools_.advance_sweeps, rng_);
  return estimate_log_ratio_exchange(theta, theta_star, at_star, grid());
}

PersistentChainStrategy::PersistentChainStrategy(SufficientStats stats, GridSpec grid, PoolSettings pools)
    : PartitionRatioStrategy(std::move(stats), std::move(grid)), pools_(pools), rng_(pools.seed) {}

double PersistentChainStrategy::log_partition_ratio(const ThetaVector& theta,
                                                    const ThetaVector& theta_star) {
  if (!pool_) pool_ = make_pool(theta, grid(), pools_.particles, pools_.advance_sweeps, rng_);
  return persistent_step(*pool_, theta, theta_star, pools_.k, grid(), rng_);
}

bool in_prior_support(const ThetaVector& theta, const MhConfig& config) {
  return (theta.array() > config.prior_low).all() && (theta.array() < config.prior_high).all();
}

double log_mh_ratio(const ThetaVector& theta, const ThetaVector& theta_star, RatioStrategy& strategy,
                    const MhConfig& config, long* nonfinite) {
  if (!in_prior_support(theta_star, config)) return kNegInf;
  const double value = strategy.log_ratio(theta, theta_star);
  if (!std::isfinite(value)) {
    if (nonfinite) ++*nonfinite;
    return kNegInf;
  }
  return value;
}

ThetaVector default_start(const MhConfig& config, int p) {
  return ThetaVector::Constant(p, 0.5 * (config.prior_low + config.prior_high));
}

PosteriorSamples run_chain(const MhConfig& config, RatioStrategy& strategy, const ThetaVector& theta0) {
  check_mh_config(config);
  if (!in_prior_support(theta0, config)) throw std::invalid_argument("theta0 outside the prior support");
  const auto p = theta0.size();
  const long kept = kept_steps(config);
  const long burn_in = config.steps - kept;
  const long retained = kept / config.thin;

  PosteriorSamples out;
  out.strategy_name = strategy.name();
  out.steps = config.steps;
  out.chain.resize(retained, p);

  Rng proposal_rng(config.seed);
  Rng accept_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double scale = std::sqrt(config.sigma_q2);

  ThetaVector theta = theta0;
  ThetaVector proposal(p);
  long row = 0;
  const auto start = std::chrono::steady_clock::now();
  for (long step = 1; step <= config.steps; ++step) {
    for (Eigen::Index j = 0; j < p; ++j) proposal[j] = theta[j] + scale * normal(proposal_rng);
    const double u = unif(accept_rng);
    const double log_a = log_mh_ratio(theta, proposal, strategy, config, &out.nonfinite);
    if (std::log(u) < log_a) {
      theta = proposal;
      ++out.accepted;
    }
    if (step > burn_in && (step - burn_in) % config.thin == 0 && row < retained) {
      out.chain.row(row++) = theta.transpose();
    }
  }
  out.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

PosteriorSummary posterior_summary(const PosteriorSamples& samples) {
  const Eigen::Index rows = samples.chain.rows();
  if (rows == 0) throw std::invalid_argument("posterior summary of an empty chain");
  PosteriorSummary summary;
  summary.mean = samples.chain.colwise().mean().transpose();
  if (rows < 2) {
    summary.sd = Eigen::VectorXd::Zero(samples.chain.cols());
    return summary;
  }
  const Eigen::MatrixXd centered = samples.chain.rowwise() - summary.mean.transpose();
  summary.sd = (centered.array().square().colwise().sum() / static_cast<double>(rows - 1)).sqrt().transpose();
  return summary;
}

Eigen::VectorXd monte_carlo_se(const PosteriorSamples& samples, int num_batches) {
  const Eigen::Index rows = samples.chain.rows();
  if (num_batches <= 0) num_batches = static_cast<int>(std::floor(std::sqrt(static_cast<double>(rows))));
  if (num_batches < 2 || rows < 2 * num_batches) {
    throw std::invalid_argument("chain too short for batch means");
  }
  const Eigen::Index batch = rows / num_batches;
  Eigen::MatrixXd means(num_batches, samples.chain.cols());
  for (int b = 0; b < num_batches; ++b) {
    means.row(b) = samples.chain.middleRows(b * batch, batch).colwise().mean();
  }
  const Eigen::RowVectorXd grand = means.colwise().mean();
  const Eigen::RowVectorXd var =
      (means.rowwise() - grand).array().square().colwise().sum() / static_cast<double>(num_batches - 1);
  return (var.array() / static_cast<double>(num_batches)).sqrt().transpose();
}

void write_chain_csv(std::ostream& out, const PosteriorSamples& samples, const MhConfig& config) {
  const long burn_in = config.steps - kept_steps(config);
  out << "step_index";
  for (Eigen::Index j = 0; j < samples.chain.cols(); ++j) out << ",theta_" << j;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (Eigen::Index r = 0; r < samples.chain.rows(); ++r) {
    out << burn_in + (r + 1) * config.thin;
    for (Eigen::Index j = 0; j < samples.chain.cols(); ++j) out << ',' << samples.chain(r, j);
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace mrflab
