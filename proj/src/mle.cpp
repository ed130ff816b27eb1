#include "mrflab/mle.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mrflab {

namespace {

Eigen::VectorXd particle_mean(const std::vector<Configuration>& particles, const GridSpec& grid) {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(grid.num_params());
  const auto& edges = grid.edges();
  for (const Configuration& x : particles) {
    for (int j = 0; j < grid.num_params(); ++j) {
      if (x[edges[j].u] == x[edges[j].v]) mean[j] += 1.0;
    }
  }
  return mean / static_cast<double>(particles.size());
}

void check_config(const CdConfig& config) {
  if (config.k < 1 || config.max_iters < 1 || config.num_particles < 1) {
    throw std::invalid_argument("CD config: k, max_iters and num_particles must be positive");
  }
  if (!(config.step_size > 0.0) || !(config.grad_tol > 0.0)) {
    throw std::invalid_argument("CD config: step_size and grad_tol must be positive");
  }
  if (!(config.average_tail >= 0.0 && config.average_tail < 1.0)) {
    throw std::invalid_argument("CD config: average_tail must lie in [0, 1)");
  }
}

MleResult run_ascent(const SufficientStats& stats, const GridSpec& grid, const CdConfig& config,
                     const Dataset* data) {
  check_config(config);
  if (stats.n < 1) throw std::invalid_argument("fit_mle needs at least one observation");
  if (stats.agree.size() != grid.num_params()) {
    throw std::invalid_argument("sufficient statistics do not match grid");
  }
  Rng rng(config.seed);
  const int p = grid.num_params();
  const double w_limit = logit(1.0 - kThetaClamp);
  const Eigen::VectorXd target = stats.mean();

  // Start from the per-edge agreement rate, which is the MLE on trees.
  Eigen::VectorXd w(p);
  for (int j = 0; j < p; ++j) w[j] = std::clamp(logit(std::clamp(target[j], kThetaClamp, 1.0 - kThetaClamp)), -w_limit, w_limit);

  std::vector<Configuration> particles(static_cast<std::size_t>(config.num_particles));
  std::uniform_int_distribution<std::size_t> pick(0, data ? data->size() - 1 : 0);
  const auto reset_particles = [&] {
    for (auto& x : particles) {
      x = data ? data->points[pick(rng)] : random_configuration(grid, rng);
    }
  };
  reset_particles();

  const int tail_start = static_cast<int>(std::floor((1.0 - config.average_tail) * config.max_iters));
  Eigen::VectorXd tail_sum = Eigen::VectorXd::Zero(p);
  int tail_count = 0;
  Eigen::VectorXd smoothed = Eigen::VectorXd::Zero(p);
  constexpr double smoothing = 0.9;

  MleResult result;
  for (int t = 1; t <= config.max_iters; ++t) {
    if (!config.persistent) reset_particles();
    for (auto& x : particles) {
      for (int s = 0; s < config.k; ++s) gibbs_sweep_logit(x, w, grid, rng);
    }
    const Eigen::VectorXd grad = target - particle_mean(particles, grid);
    smoothed = t == 1 ? grad : Eigen::VectorXd(smoothing * smoothed + (1.0 - smoothing) * grad);
    w += (config.step_size / std::sqrt(static_cast<double>(t))) * grad;
    w = w.cwiseMax(-w_limit).cwiseMin(w_limit);

    if (t > tail_start) {
      tail_sum += w;
      ++tail_count;
    }
    result.iters_used = t;
    result.grad_norm = smoothed.norm();
    if (result.grad_norm <= config.grad_tol) {
      result.converged = true;
      break;
    }
  }

  const Eigen::VectorXd w_hat = tail_count > 0 && !result.converged ? Eigen::VectorXd(tail_sum / tail_count) : w;
  result.theta_hat = inv_logit(w_hat).cwiseMax(kThetaClamp).cwiseMin(1.0 - kThetaClamp);
  return result;
}

}  // namespace

Eigen::VectorXd cd_gradient(const SufficientStats& stats, const std::vector<Configuration>& particles,
                            const GridSpec& grid) {
  if (particles.empty()) throw std::invalid_argument("cd_gradient needs at least one particle");
  if (stats.agree.size() != grid.num_params()) {
    throw std::invalid_argument("sufficient statistics do not match grid");
  }
  for (const auto& x : particles) {
    if (static_cast<int>(x.size()) != grid.num_nodes()) {
      throw std::invalid_argument("particle length does not match grid");
    }
  }
  return stats.mean() - particle_mean(particles, grid);
}

MleResult fit_mle(const SufficientStats& stats, const GridSpec& grid, const CdConfig& config) {
  if (!config.persistent) {
    throw std::invalid_argument("non-persistent CD restarts particles at data points; pass the dataset");
  }
  return run_ascent(stats, grid, config, nullptr);
}

MleResult fit_mle(const Dataset& data, const GridSpec& grid, const CdConfig& config) {
  if (data.empty()) throw std::invalid_argument("fit_mle needs at least one observation");
  return run_ascent(sufficient_stats(data, grid), grid, config, &data);
}

void write_theta_csv(std::ostream& out, const ThetaVector& theta, const char* value_column) {
  out << "param_index," << value_column << '\n';
  const auto old_precision = out.precision(17);
  for (Eigen::Index j = 0; j < theta.size(); ++j) out << j << ',' << theta[j] << '\n';
  out.precision(old_precision);
}

ThetaVector read_theta_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("theta csv: missing header");
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("theta csv: malformed row '" + line + "'");
    const long index = std::stol(line.substr(0, comma));
    if (index != static_cast<long>(values.size())) throw std::runtime_error("theta csv: indices out of order");
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace mrflab
