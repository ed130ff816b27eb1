// Random-walk Metropolis-Hastings over edge parameters with pluggable
// likelihood / partition-ratio strategies.

#ifndef MRFLAB_MH_HPP
#define MRFLAB_MH_HPP

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "mrflab/baselines_likelihood.hpp"
#include "mrflab/baselines_sampling.hpp"
#include "mrflab/mle_likelihood.hpp"
#include "mrflab/model.hpp"

namespace mrflab {

struct MhConfig {
  long steps = 1'000'000;
  double sigma_q2 = 0.001;
  double prior_low = 0.0;
  double prior_high = 1.0;
  double burn_in_fraction = 0.2;
  int thin = 1;
  std::uint64_t seed = 0;
};

void check_mh_config(const MhConfig& config);

/// Produces the data-dependent part of the log acceptance ratio for a move
/// theta -> theta_star. Implementations may own mutable state (particle pools,
/// caches, a random stream); one instance belongs to one chain.
class RatioStrategy {
 public:
  virtual ~RatioStrategy() = default;
  virtual std::string name() const = 0;
  virtual double log_ratio(const ThetaVector& theta, const ThetaVector& theta_star) = 0;
};

/// Strategies with a closed-form (approximate) log-likelihood. The value at the
/// current state and at the last proposal are cached, so each MH step costs one
/// evaluation.
class LikelihoodStrategy : public RatioStrategy {
 public:
  double log_ratio(const ThetaVector& theta, const ThetaVector& theta_star) override;
  virtual double log_likelihood(const ThetaVector& theta) const = 0;

 private:
  double cached(const ThetaVector& theta);

  struct Slot {
    ThetaVector theta;
    double value = 0.0;
  };
  std::optional<Slot> slots_[2];
  int next_slot_ = 0;
};

class ExactLikelihoodStrategy final : public LikelihoodStrategy {
 public:
  ExactLikelihoodStrategy(SufficientStats stats, GridSpec grid);
  std::string name() const override { return "exact"; }
  double log_likelihood(const ThetaVector& theta) const override;

 private:
  SufficientStats stats_;
  GridSpec grid_;
};

class MleLikelihoodStrategy final : public LikelihoodStrategy {
 public:
  explicit MleLikelihoodStrategy(MleLikelihoodModel model);
  std::string name() const override { return "mle-L"; }
  double log_likelihood(const ThetaVector& theta) const override;
  const MleLikelihoodModel& model() const { return model_; }

 private:
  MleLikelihoodModel model_;
};

class PseudoLikelihoodStrategy final : public LikelihoodStrategy {
 public:
  PseudoLikelihoodStrategy(Dataset data, GridSpec grid);
  std::string name() const override { return "pseudo-L"; }
  double log_likelihood(const ThetaVector& theta) const override;

 private:
  Dataset data_;
  GridSpec grid_;
};

class LaplaceLikelihoodStrategy final : public LikelihoodStrategy {
 public:
  LaplaceLikelihoodStrategy(LaplaceModel model, SufficientStats stats);
  std::string name() const override { return "laplace-L"; }
  double log_likelihood(const ThetaVector& theta) const override;

 private:
  LaplaceModel model_;
  SufficientStats stats_;
};

/// Strategies that estimate r = Z(theta) / Z(theta_star). The log ratio is
///   sum_i [log P~(x^i; theta_star) - log P~(x^i; theta)] + n log r_hat,
/// with the data term computed from the agreement counts.
class PartitionRatioStrategy : public RatioStrategy {
 public:
  PartitionRatioStrategy(SufficientStats stats, GridSpec grid);
  double log_ratio(const ThetaVector& theta, const ThetaVector& theta_star) override;
  virtual double log_partition_ratio(const ThetaVector& theta, const ThetaVector& theta_star) = 0;

 protected:
  const GridSpec& grid() const { return grid_; }

 private:
  SufficientStats stats_;
  GridSpec grid_;
};

struct PoolSettings {
  int particles = 1000;
  int advance_sweeps = 1000;
  int k = 1;
  std::uint64_t seed = 0;
};

/// Fresh pools at theta and theta_star on every call.
class IsGeometricStrategy final : public PartitionRatioStrategy {
 public:
  IsGeometricStrategy(SufficientStats stats, GridSpec grid, PoolSettings pools);
  std::string name() const override { return "is-geometric"; }
  double log_partition_ratio(const ThetaVector& theta, const ThetaVector& theta_star) override;

 private:
  PoolSettings pools_;
  Rng rng_;
};

class AuxVarStrategy final : public PartitionRatioStrategy {
 public:
  AuxVarStrategy(SufficientStats stats, GridSpec grid, ThetaVector theta_ref, PoolSettings pools);
  std::string name() const override { return "auxvar"; }
  double log_partition_ratio(const ThetaVector& theta, const ThetaVector& theta_star) override;

 private:
  ThetaVector theta_ref_;
  PoolSettings pools_;
  Rng rng_;
};

class ExchangeStrategy final : public PartitionRatioStrategy {
 public:
  ExchangeStrategy(SufficientStats stats, GridSpec grid, PoolSettings pools);
  std::string name() const override { return "exch"; }
  double log_partition_ratio(const ThetaVector& theta, const ThetaVector& theta_star) override;

 private:
  PoolSettings pools_;
  Rng rng_;
};

/// One pool for the whole chain, built at the first proposal and advanced k
/// sweeps under every proposed theta_star whether or not the move is accepted.
class PersistentChainStrategy final : public PartitionRatioStrategy {
 public:
  PersistentChainStrategy(SufficientStats stats, GridSpec grid, PoolSettings pools);
  std::string name() const override { return "persist-mc"; }
  double log_partition_ratio(const ThetaVector& theta, const ThetaVector& theta_star) override;
  const std::optional<ParticlePool>& pool() const { return pool_; }

 private:
  PoolSettings pools_;
  Rng rng_;
  std::optional<ParticlePool> pool_;
};

bool in_prior_support(const ThetaVector& theta, const MhConfig& config);

/// Log acceptance ratio under the uniform prior and symmetric Gaussian
/// proposal: -inf outside the prior support, otherwise the strategy's term.
/// Non-finite strategy output is mapped to -inf and counted in *nonfinite.
double log_mh_ratio(const ThetaVector& theta, const ThetaVector& theta_star, RatioStrategy& strategy,
                    const MhConfig& config, long* nonfinite = nullptr);

struct PosteriorSamples {
  Eigen::MatrixXd chain;  // one retained state per row
  long accepted = 0;
  long steps = 0;
  long nonfinite = 0;
  double runtime_ms = 0.0;
  std::string strategy_name;

  double acceptance_rate() const { return steps > 0 ? static_cast<double>(accepted) / steps : 0.0; }
  bool never_moved() const { return accepted == 0; }
};

/// Retains floor(steps (1 - burn_in_fraction) / thin) states. Proposals and
/// acceptance uniforms come from two streams seeded from config.seed only, so
/// every strategy sees the same proposal noise.
PosteriorSamples run_chain(const MhConfig& config, RatioStrategy& strategy, const ThetaVector& theta0);

/// Default starting point: the midpoint of the prior support in every coordinate.
ThetaVector default_start(const MhConfig& config, int p);

struct PosteriorSummary {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

PosteriorSummary posterior_summary(const PosteriorSamples& samples);

/// Batch-means Monte Carlo standard error of the posterior mean, per coordinate.
Eigen::VectorXd monte_carlo_se(const PosteriorSamples& samples, int num_batches = 0);

/// CSV rows step_index,theta_0,...,theta_{p-1} for retained samples.
void write_chain_csv(std::ostream& out, const PosteriorSamples& samples, const MhConfig& config);

}  // namespace mrflab

#endif  // MRFLAB_MH_HPP
