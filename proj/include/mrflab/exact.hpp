// Exact partition function and likelihood for small grids.

#ifndef MRFLAB_EXACT_HPP
#define MRFLAB_EXACT_HPP

#include <Eigen/Core>

#include "mrflab/model.hpp"

namespace mrflab {

inline constexpr int kMaxEnumerationNodes = 20;
inline constexpr int kMaxRecursionWidth = 25;

enum class ExactMethod { brute_force, recursive };

struct ExactResult {
  double log_z;
  ExactMethod method;
};

/// Sums the unnormalized measure over all 2^d states. Refuses d > 20.
double brute_force_log_z(const ThetaVector& theta, const GridSpec& grid);

/// Forward pass over the nodes along the longer dimension, carrying the joint
/// weight of the last l = min(rows, cols) nodes. Each added node picks up its
/// (at most two) edges to earlier nodes, both of which lie inside the window,
/// and the node leaving the window is summed out. Cost O(d 2^{l+1}).
double recursive_log_z(const ThetaVector& theta, const GridSpec& grid);

ExactResult exact_log_z(const ThetaVector& theta, const GridSpec& grid);

/// sum_j [alpha_j log theta_j + (n - alpha_j) log(1 - theta_j)] - n log Z(theta).
double exact_log_likelihood(const SufficientStats& stats, const ThetaVector& theta,
                            const GridSpec& grid);

struct ModelMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Mean and covariance of the agreement statistics under P(.; theta), by enumeration.
ModelMoments exact_model_moments(const ThetaVector& theta, const GridSpec& grid);

/// Normalized probability of every configuration, indexed by the bit pattern
/// sum_v x_v 2^v. Refuses d > 20.
Eigen::VectorXd enumerate_probabilities(const ThetaVector& theta, const GridSpec& grid);

Configuration configuration_from_index(unsigned long long index, int num_nodes);

}  // namespace mrflab

#endif  // MRFLAB_EXACT_HPP
