// Maximum-likelihood estimation by contrastive divergence.

#ifndef MRFLAB_MLE_HPP
#define MRFLAB_MLE_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "mrflab/model.hpp"

namespace mrflab {

inline constexpr double kThetaClamp = 1e-6;

struct CdConfig {
  int k = 1;                  // Gibbs sweeps per gradient step
  double step_size = 0.05;    // decays as step_size / sqrt(t)
  int max_iters = 2000;
  int num_particles = 100;
  bool persistent = true;
  double grad_tol = 1e-3;
  std::uint64_t seed = 0;
  // Fraction of the final iterations whose iterates are averaged into
  // theta_hat. Zero returns the last iterate.
  double average_tail = 0.5;
};

struct MleResult {
  ThetaVector theta_hat;
  double grad_norm = 0.0;
  int iters_used = 0;
  bool converged = false;
};

/// alpha / n minus the particle mean of the agreement statistics: the ascent
/// direction of the log-likelihood in w = logit(theta).
Eigen::VectorXd cd_gradient(const SufficientStats& stats, const std::vector<Configuration>& particles,
                            const GridSpec& grid);

MleResult fit_mle(const SufficientStats& stats, const GridSpec& grid, const CdConfig& config);
MleResult fit_mle(const Dataset& data, const GridSpec& grid, const CdConfig& config);

/// CSV with header param_index,theta_hat.
void write_theta_csv(std::ostream& out, const ThetaVector& theta, const char* value_column = "theta_hat");
ThetaVector read_theta_csv(std::istream& in);

}  // namespace mrflab

#endif  // MRFLAB_MLE_HPP
