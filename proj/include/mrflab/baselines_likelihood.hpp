// Pseudolikelihood and a second-order (Laplace-style) surrogate of the
// log-likelihood around the MLE.

#ifndef MRFLAB_BASELINES_LIKELIHOOD_HPP
#define MRFLAB_BASELINES_LIKELIHOOD_HPP

#include <Eigen/Core>

#include "mrflab/model.hpp"

namespace mrflab {

/// sum_i sum_v log P(x_v^i | x_ne(v)^i; theta). Linear in the number of points.
double log_pseudolikelihood(const Dataset& data, const ThetaVector& theta, const GridSpec& grid);

struct LaplaceModel {
  Eigen::VectorXd w_hat;
  Eigen::VectorXd mu_hat;
  Eigen::MatrixXd cov_hat;
  double log_l_at_mode = 0.0;
  bool has_mode_value = false;
  bool exact_moments = false;
};

struct LaplaceOptions {
  int sample_budget = 10000;
  int burn_in_sweeps = 1000;
  int spacing_sweeps = 1;
  // Enumerate when the grid is small enough; false forces the sampled path.
  bool use_exact_moments = true;
};

/// Moments of the agreement statistics at theta_hat: by enumeration when the
/// grid has at most 20 nodes, otherwise from sample_budget Gibbs draws. When
/// stats is given and the recursion can handle the grid, the exact
/// log-likelihood at theta_hat is stored as the surrogate's value at the mode.
LaplaceModel fit_laplace(const ThetaVector& theta_hat, const GridSpec& grid, Rng& rng,
                         const LaplaceOptions& options = {}, const SufficientStats* stats = nullptr);

/// log_l_at_mode + n [(sbar - mu_hat)^T dw - 1/2 dw^T cov_hat dw], dw = logit(theta) - w_hat.
double log_laplace_likelihood(const ThetaVector& theta, const LaplaceModel& model,
                              const SufficientStats& stats);

}  // namespace mrflab

#endif  // MRFLAB_BASELINES_LIKELIHOOD_HPP
