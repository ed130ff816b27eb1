#include "mrflab/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mrflab {

namespace {

void check_enumerable(const GridSpec& grid) {
  if (grid.num_nodes() > kMaxEnumerationNodes) {
    throw std::invalid_argument("enumeration refused: grid has " +
                                std::to_string(grid.num_nodes()) + " nodes (limit " +
                                std::to_string(kMaxEnumerationNodes) + ")");
  }
}

// Log unnormalized weight of every configuration.
std::vector<double> enumerate_log_weights(const ThetaVector& theta, const GridSpec& grid) {
  check_enumerable(grid);
  check_theta(theta, grid);
  const int d = grid.num_nodes();
  const Eigen::VectorXd log_theta = theta.array().log();
  const Eigen::VectorXd log_comp = (1.0 - theta.array()).log();
  const auto& edges = grid.edges();
  std::vector<double> weights(std::size_t{1} << d);
  for (std::size_t idx = 0; idx < weights.size(); ++idx) {
    double lw = 0.0;
    for (std::size_t j = 0; j < edges.size(); ++j) {
      const bool a = (idx >> edges[j].u) & 1U;
      const bool b = (idx >> edges[j].v) & 1U;
      lw += a == b ? log_theta[j] : log_comp[j];
    }
    weights[idx] = lw;
  }
  return weights;
}

double log_sum_exp(const std::vector<double>& values) {
  const double max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max);
  return max + std::log(sum);
}

}  // namespace

Configuration configuration_from_index(unsigned long long index, int num_nodes) {
  Configuration x(static_cast<std::size_t>(num_nodes));
  for (int v = 0; v < num_nodes; ++v) x[v] = (index >> v) & 1ULL;
  return x;
}

double brute_force_log_z(const ThetaVector& theta, const GridSpec& grid) {
  return log_sum_exp(enumerate_log_weights(theta, grid));
}

Eigen::VectorXd enumerate_probabilities(const ThetaVector& theta, const GridSpec& grid) {
  const std::vector<double> lw = enumerate_log_weights(theta, grid);
  const double log_z = log_sum_exp(lw);
  Eigen::VectorXd prob(static_cast<Eigen::Index>(lw.size()));
  for (std::size_t i = 0; i < lw.size(); ++i) prob[static_cast<Eigen::Index>(i)] = std::exp(lw[i] - log_z);
  return prob;
}

double recursive_log_z(const ThetaVector& theta, const GridSpec& grid) {
  check_theta(theta, grid);
  // Walk "lines" of length `width` along the longer dimension. With rows >= cols
  // the walk is row-major; otherwise it is column-major.
  const bool row_major = grid.rows() >= grid.cols();
  const int width = row_major ? grid.cols() : grid.rows();
  const int lines = row_major ? grid.rows() : grid.cols();
  if (width > kMaxRecursionWidth) {
    throw std::invalid_argument("recursion window too large: width " + std::to_string(width));
  }
  const auto at = [&](int line, int pos) {
    return row_major ? grid.node(line, pos) : grid.node(pos, line);
  };

  // table[idx]: bit 0 holds the oldest node in the window (the one `width`
  // steps back), bit width-1 the most recent. Before any node is added the
  // window is filled with virtual zeros that carry no potentials.
  const std::size_t states = std::size_t{1} << width;
  const int top = width - 1;
  std::vector<double> table(states, 0.0), next(states, 0.0);
  table[0] = 1.0;
  double log_scale = 0.0;

  for (int line = 0; line < lines; ++line) {
    for (int pos = 0; pos < width; ++pos) {
      const int node = at(line, pos);
      const int prev_edge = pos > 0 ? grid.edge_between(node, at(line, pos - 1)) : -1;
      const int back_edge = line > 0 ? grid.edge_between(node, at(line - 1, pos)) : -1;
      double prev_pot[2][2] = {{1.0, 1.0}, {1.0, 1.0}};
      double back_pot[2][2] = {{1.0, 1.0}, {1.0, 1.0}};
      if (prev_edge >= 0) {
        const double t = theta[prev_edge];
        prev_pot[0][0] = prev_pot[1][1] = t;
        prev_pot[0][1] = prev_pot[1][0] = 1.0 - t;
      }
      if (back_edge >= 0) {
        const double t = theta[back_edge];
        back_pot[0][0] = back_pot[1][1] = t;
        back_pot[0][1] = back_pot[1][0] = 1.0 - t;
      }

      std::fill(next.begin(), next.end(), 0.0);
      double peak = 0.0;
      for (std::size_t idx = 0; idx < states; ++idx) {
        const double f = table[idx];
        if (f == 0.0) continue;
        const unsigned oldest = idx & 1U;
        const unsigned newest = (idx >> top) & 1U;
        const std::size_t shifted = idx >> 1;
        for (unsigned a = 0; a < 2; ++a) {
          const std::size_t target = shifted | (std::size_t{a} << top);
          next[target] += f * back_pot[oldest][a] * prev_pot[newest][a];
        }
      }
      for (double v : next) peak = std::max(peak, v);
      for (double& v : next) v /= peak;
      log_scale += std::log(peak);
      table.swap(next);
    }
  }

  double total = 0.0;
  for (double v : table) total += v;
  return log_scale + std::log(total);
}

ExactResult exact_log_z(const ThetaVector& theta, const GridSpec& grid) {
  if (std::min(grid.rows(), grid.cols()) <= kMaxRecursionWidth) {
    return {recursive_log_z(theta, grid), ExactMethod::recursive};
  }
  return {brute_force_log_z(theta, grid), ExactMethod::brute_force};
}

double exact_log_likelihood(const SufficientStats& stats, const ThetaVector& theta,
                            const GridSpec& grid) {
  check_theta(theta, grid);
  if (stats.agree.size() != grid.num_params()) {
    throw std::invalid_argument("sufficient statistics do not match grid");
  }
  if (stats.n == 0) return 0.0;
  const Eigen::ArrayXd a = stats.agree.cast<double>().array();
  const double n = stats.n;
  const double unnormalized =
      (a * theta.array().log() + (n - a) * (1.0 - theta.array()).log()).sum();
  return unnormalized - n * recursive_log_z(theta, grid);
}

ModelMoments exact_model_moments(const ThetaVector& theta, const GridSpec& grid) {
  const Eigen::VectorXd prob = enumerate_probabilities(theta, grid);
  const int p = grid.num_params();
  const auto& edges = grid.edges();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd s(p);
  for (Eigen::Index idx = 0; idx < prob.size(); ++idx) {
    const auto bits = static_cast<unsigned long long>(idx);
    for (int j = 0; j < p; ++j) {
      s[j] = ((bits >> edges[j].u) & 1ULL) == ((bits >> edges[j].v) & 1ULL) ? 1.0 : 0.0;
    }
    mean.noalias() += prob[idx] * s;
    second.noalias() += prob[idx] * s * s.transpose();
  }
  return {mean, second - mean * mean.transpose()};
}

}  // namespace mrflab
