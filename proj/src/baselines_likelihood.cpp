#include "mrflab/baselines_likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mrflab/exact.hpp"

namespace mrflab {

namespace {

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

double log_pseudolikelihood(const Dataset& data, const ThetaVector& theta, const GridSpec& grid) {
  check_theta(theta, grid);
  const Eigen::VectorXd w = logit(theta);
  const int d = grid.num_nodes();
  double total = 0.0;
  for (const Configuration& x : data.points) {
    if (static_cast<int>(x.size()) != d) throw std::invalid_argument("configuration length does not match grid");
    for (int v = 0; v < d; ++v) {
      // log P(x_v | rest) = -log(1 + exp(-(2 x_v - 1) eta))
      const double eta = site_log_odds(x, v, w, grid);
      total -= softplus(x[v] ? -eta : eta);
    }
  }
  return total;
}

LaplaceModel fit_laplace(const ThetaVector& theta_hat, const GridSpec& grid, Rng& rng,
                         const LaplaceOptions& options, const SufficientStats* stats) {
  check_theta(theta_hat, grid);
  LaplaceModel model;
  model.w_hat = logit(theta_hat);
  if (options.use_exact_moments && grid.num_nodes() <= kMaxEnumerationNodes) {
    ModelMoments moments = exact_model_moments(theta_hat, grid);
    model.mu_hat = std::move(moments.mean);
    model.cov_hat = std::move(moments.cov);
    model.exact_moments = true;
  } else {
    if (options.sample_budget < 2) throw std::invalid_argument("Laplace fit needs at least two samples");
    const Dataset draws = sample_dataset(theta_hat, grid, options.sample_budget, rng,
                                         {options.burn_in_sweeps, options.spacing_sweeps});
    const int p = grid.num_params();
    Eigen::MatrixXd s(static_cast<Eigen::Index>(draws.size()), p);
    for (std::size_t i = 0; i < draws.size(); ++i) {
      s.row(static_cast<Eigen::Index>(i)) = edge_agreement(draws.points[i], grid).transpose();
    }
    model.mu_hat = s.colwise().mean().transpose();
    const Eigen::MatrixXd centered = s.rowwise() - model.mu_hat.transpose();
    model.cov_hat = centered.transpose() * centered / static_cast<double>(s.rows() - 1);
  }
  model.cov_hat = 0.5 * (model.cov_hat + model.cov_hat.transpose());
  if (stats != nullptr && std::min(grid.rows(), grid.cols()) <= kMaxRecursionWidth) {
    model.log_l_at_mode = exact_log_likelihood(*stats, theta_hat, grid);
    model.has_mode_value = true;
  }
  return model;
}

double log_laplace_likelihood(const ThetaVector& theta, const LaplaceModel& model,
                              const SufficientStats& stats) {
  if (theta.size() != model.w_hat.size() || stats.agree.size() != model.w_hat.size()) {
    throw std::invalid_argument("Laplace surrogate dimension mismatch");
  }
  if (!theta_in_open_unit_box(theta)) throw std::domain_error("theta components must lie in (0, 1)");
  const Eigen::VectorXd dw = logit(theta) - model.w_hat;
  const double linear = (stats.mean() - model.mu_hat).dot(dw);
  const double quadratic = dw.dot(model.cov_hat * dw);
  return model.log_l_at_mode + stats.n * (linear - 0.5 * quadratic);
}

}  // namespace mrflab
