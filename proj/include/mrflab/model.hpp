// Binary pairwise grid Markov random field.
//
// Every edge j carries a potential theta_j^{[x_u == x_v]} (1 - theta_j)^{[x_u != x_v]}
// with theta_j in (0, 1). Nodes are numbered row-major; the canonical edge order
// lists all horizontal edges (row-major) before all vertical edges (row-major),
// so a parameter index always names the same edge for a given (rows, cols).

#ifndef MRFLAB_MODEL_HPP
#define MRFLAB_MODEL_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mrflab {

using Rng = std::mt19937_64;

/// Edge parameters theta_j, one per canonical edge.
using ThetaVector = Eigen::VectorXd;

/// One lattice state; each entry is 0 or 1.
using Configuration = std::vector<std::uint8_t>;

struct Edge {
  int u;
  int v;
};

struct Neighbor {
  int node;
  int edge;
};

class GridSpec {
 public:
  GridSpec(int rows, int cols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int num_nodes() const { return rows_ * cols_; }
  int num_params() const { return static_cast<int>(edges_.size()); }
  int node(int r, int c) const { return r * cols_ + c; }

  const std::vector<Edge>& edges() const { return edges_; }
  std::span<const Neighbor> neighbors(int node) const {
    return {neighbors_.data() + offsets_[node], neighbors_.data() + offsets_[node + 1]};
  }

  /// Index of the edge joining two nodes, or -1 when they are not adjacent.
  int edge_between(int a, int b) const;

  bool operator==(const GridSpec& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  int rows_;
  int cols_;
  std::vector<Edge> edges_;
  std::vector<Neighbor> neighbors_;
  std::vector<int> offsets_;
};

GridSpec build_grid(int rows, int cols);

struct Dataset {
  std::vector<Configuration> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Per-edge agreement counts alpha_j over n observations.
struct SufficientStats {
  Eigen::VectorXi agree;
  int n = 0;

  Eigen::VectorXd mean() const;
};

/// Throws std::invalid_argument on a length mismatch, std::domain_error when a
/// component falls outside (0, 1).
void check_theta(const ThetaVector& theta, const GridSpec& grid);
bool theta_in_open_unit_box(const ThetaVector& theta);

/// Agreement indicators s_j(x) as 0/1.
Eigen::VectorXd edge_agreement(const Configuration& x, const GridSpec& grid);

double unnormalized_log_prob(const Configuration& x, const ThetaVector& theta, const GridSpec& grid);

/// Same quantity from precomputed log(theta) and log(1 - theta); used in hot loops.
double unnormalized_log_prob(const Configuration& x, const Eigen::VectorXd& log_theta,
                             const Eigen::VectorXd& log_one_minus_theta, const GridSpec& grid);

SufficientStats sufficient_stats(const Dataset& data, const GridSpec& grid);

/// Site-conditional log-odds log P(x_v = 1 | rest) - log P(x_v = 0 | rest),
/// given w = logit(theta).
inline double site_log_odds(const Configuration& x, int node, const Eigen::VectorXd& w,
                            const GridSpec& grid) {
  double eta = 0.0;
  for (const Neighbor& nb : grid.neighbors(node)) {
    eta += x[nb.node] ? w[nb.edge] : -w[nb.edge];
  }
  return eta;
}

/// One systematic scan over the nodes in index order.
void gibbs_sweep(Configuration& x, const ThetaVector& theta, const GridSpec& grid, Rng& rng);

/// Variant taking w = logit(theta) directly, for callers that sweep many particles.
void gibbs_sweep_logit(Configuration& x, const Eigen::VectorXd& w, const GridSpec& grid, Rng& rng);

struct SamplingOptions {
  int burn_in_sweeps = 1000;
  int spacing_sweeps = 10;
};

/// n configurations from a single Gibbs chain started at a uniform random state.
Dataset sample_dataset(const ThetaVector& theta, const GridSpec& grid, int n, Rng& rng,
                       const SamplingOptions& options = {});

struct CoalescedSample {
  Configuration state;
  bool coalesced = false;
  int sweeps_used = 0;
};

/// Runs chains from all-zeros and all-ones driven by the same uniforms, extending
/// the start time backwards (1, 2, 4, ... sweeps) until they meet at time 0.
/// Monotone coupling only holds in the attractive regime (all theta_j >= 0.5);
/// outside it the call degrades to a plain burn-in of max_sweeps and reports
/// coalesced = false.
CoalescedSample coalesced_sample(const ThetaVector& theta, const GridSpec& grid, Rng& rng,
                                 int max_sweeps);

Configuration random_configuration(const GridSpec& grid, Rng& rng);

// .mrfdat: header line "rows cols n", then one line of d '0'/'1' characters per point.
void write_dataset(std::ostream& out, const Dataset& data, const GridSpec& grid);
void write_dataset_file(const std::string& path, const Dataset& data, const GridSpec& grid);

struct LoadedDataset {
  GridSpec grid;
  Dataset data;
};

LoadedDataset read_dataset(std::istream& in);
LoadedDataset read_dataset_file(const std::string& path);

inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double inv_logit(double w) { return 1.0 / (1.0 + std::exp(-w)); }

Eigen::VectorXd logit(const ThetaVector& theta);
ThetaVector inv_logit(const Eigen::VectorXd& w);

}  // namespace mrflab

#endif  // MRFLAB_MODEL_HPP
