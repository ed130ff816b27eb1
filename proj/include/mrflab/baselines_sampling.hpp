// Particle estimators of log r = log Z(theta) - log Z(theta_star).

#ifndef MRFLAB_BASELINES_SAMPLING_HPP
#define MRFLAB_BASELINES_SAMPLING_HPP

#include <vector>

#include "mrflab/model.hpp"

namespace mrflab {

struct ParticlePool {
  std::vector<Configuration> particles;
  ThetaVector current_theta;
  // Set when coupled chains from the two extreme states met within the
  // advance budget (attractive regime only).
  bool coalesced = false;

  std::size_t size() const { return particles.size(); }
};

/// s particles from uniform random states, each advanced advance_sweeps Gibbs
/// sweeps under theta. In the attractive regime the coupled sampler is run
/// alongside with the same sweep cap to record whether coalescence happened.
ParticlePool make_pool(const ThetaVector& theta, const GridSpec& grid, int s, int advance_sweeps,
                       Rng& rng);

/// Geometric-bridge importance sampling with alpha(x) = (P~(x; theta) P~(x; theta_star))^{-1/2}:
/// mean over pool_theta_star of sqrt(P~(x; theta) / P~(x; theta_star)) divided by
/// mean over pool_theta of sqrt(P~(x; theta_star) / P~(x; theta)).
double estimate_log_ratio_is_geometric(const ThetaVector& theta, const ThetaVector& theta_star,
                                       const ParticlePool& pool_theta,
                                       const ParticlePool& pool_theta_star, const GridSpec& grid);

/// Auxiliary-variable estimator through a fixed reference theta_ref:
/// mean over pool_theta_star of P~(x; theta_ref) / P~(x; theta_star) divided by
/// mean over pool_theta of P~(x; theta_ref) / P~(x; theta).
double estimate_log_ratio_auxvar(const ThetaVector& theta, const ThetaVector& theta_star,
                                 const ThetaVector& theta_ref, const ParticlePool& pool_theta,
                                 const ParticlePool& pool_theta_star, const GridSpec& grid);

/// Exchange estimator: log mean over pool_theta_star of P~(x; theta) / P~(x; theta_star).
double estimate_log_ratio_exchange(const ThetaVector& theta, const ThetaVector& theta_star,
                                   const ParticlePool& pool_theta_star, const GridSpec& grid);

/// Advances every particle k sweeps under theta_star, then applies the exchange
/// estimator to the advanced particles with theta as the current chain state.
/// The pool is re-tagged with theta_star.
double persistent_step(ParticlePool& pool, const ThetaVector& theta, const ThetaVector& theta_star,
                       int k, const GridSpec& grid, Rng& rng);

/// As above with theta taken from the pool's tag.
double persistent_step(ParticlePool& pool, const ThetaVector& theta_star, int k,
                       const GridSpec& grid, Rng& rng);

/// Per-particle log importance weights log P~(x; numer) - log P~(x; denom).
std::vector<double> log_weight_ratios(const ParticlePool& pool, const ThetaVector& numer,
                                      const ThetaVector& denom, const GridSpec& grid);

/// log of the arithmetic mean of exp(values).
double log_mean_exp(const std::vector<double>& values);

}  // namespace mrflab

#endif  // MRFLAB_BASELINES_SAMPLING_HPP
