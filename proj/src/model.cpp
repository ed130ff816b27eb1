#include "mrflab/model.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mrflab {

GridSpec::GridSpec(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("grid dimensions must be positive");
  }
  if (rows * cols < 2) {
    throw std::invalid_argument("grid needs at least two nodes");
  }
  edges_.reserve(static_cast<std::size_t>(rows * (cols - 1) + (rows - 1) * cols));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c + 1 < cols; ++c) {
      edges_.push_back({node(r, c), node(r, c + 1)});
    }
  }
  for (int r = 0; r + 1 < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      edges_.push_back({node(r, c), node(r + 1, c)});
    }
  }

  const int d = num_nodes();
  std::vector<int> degree(static_cast<std::size_t>(d), 0);
  for (const Edge& e : edges_) {
    ++degree[e.u];
    ++degree[e.v];
  }
  offsets_.assign(static_cast<std::size_t>(d) + 1, 0);
  for (int i = 0; i < d; ++i) offsets_[i + 1] = offsets_[i] + degree[i];
  neighbors_.resize(static_cast<std::size_t>(offsets_[d]));
  std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
  for (int j = 0; j < num_params(); ++j) {
    const Edge& e = edges_[j];
    neighbors_[fill[e.u]++] = {e.v, j};
    neighbors_[fill[e.v]++] = {e.u, j};
  }
}

int GridSpec::edge_between(int a, int b) const {
  for (const Neighbor& nb : neighbors(a)) {
    if (nb.node == b) return nb.edge;
  }
  return -1;
}

GridSpec build_grid(int rows, int cols) { return GridSpec(rows, cols); }

Eigen::VectorXd SufficientStats::mean() const {
  if (n == 0) return Eigen::VectorXd::Zero(agree.size());
  return agree.cast<double>() / static_cast<double>(n);
}

bool theta_in_open_unit_box(const ThetaVector& theta) {
  return (theta.array() > 0.0).all() && (theta.array() < 1.0).all();
}

void check_theta(const ThetaVector& theta, const GridSpec& grid) {
  if (theta.size() != grid.num_params()) {
    throw std::invalid_argument("theta length " + std::to_string(theta.size()) +
                                " does not match edge count " +
                                std::to_string(grid.num_params()));
  }
  if (!theta_in_open_unit_box(theta)) {
    throw std::domain_error("theta components must lie in (0, 1)");
  }
}

namespace {

void check_configuration(const Configuration& x, const GridSpec& grid) {
  if (static_cast<int>(x.size()) != grid.num_nodes()) {
    throw std::invalid_argument("configuration length does not match grid");
  }
}

}  // namespace

Eigen::VectorXd edge_agreement(const Configuration& x, const GridSpec& grid) {
  check_configuration(x, grid);
  Eigen::VectorXd s(grid.num_params());
  const auto& edges = grid.edges();
  for (int j = 0; j < grid.num_params(); ++j) {
    s[j] = x[edges[j].u] == x[edges[j].v] ? 1.0 : 0.0;
  }
  return s;
}

double unnormalized_log_prob(const Configuration& x, const ThetaVector& theta, const GridSpec& grid) {
  check_theta(theta, grid);
  check_configuration(x, grid);
  const Eigen::VectorXd log_theta = theta.array().log();
  const Eigen::VectorXd log_comp = (1.0 - theta.array()).log();
  return unnormalized_log_prob(x, log_theta, log_comp, grid);
}

double unnormalized_log_prob(const Configuration& x, const Eigen::VectorXd& log_theta,
                             const Eigen::VectorXd& log_one_minus_theta, const GridSpec& grid) {
  double total = 0.0;
  const auto& edges = grid.edges();
  for (std::size_t j = 0; j < edges.size(); ++j) {
    total += x[edges[j].u] == x[edges[j].v] ? log_theta[j] : log_one_minus_theta[j];
  }
  return total;
}

SufficientStats sufficient_stats(const Dataset& data, const GridSpec& grid) {
  SufficientStats stats;
  stats.agree = Eigen::VectorXi::Zero(grid.num_params());
  stats.n = static_cast<int>(data.size());
  const auto& edges = grid.edges();
  for (const Configuration& x : data.points) {
    check_configuration(x, grid);
    for (int j = 0; j < grid.num_params(); ++j) {
      if (x[edges[j].u] == x[edges[j].v]) ++stats.agree[j];
    }
  }
  return stats;
}

Eigen::VectorXd logit(const ThetaVector& theta) {
  return (theta.array() / (1.0 - theta.array())).log();
}

ThetaVector inv_logit(const Eigen::VectorXd& w) {
  return 1.0 / (1.0 + (-w.array()).exp());
}

void gibbs_sweep_logit(Configuration& x, const Eigen::VectorXd& w, const GridSpec& grid, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int v = 0; v < grid.num_nodes(); ++v) {
    const double p1 = inv_logit(site_log_odds(x, v, w, grid));
    x[v] = unif(rng) < p1 ? 1 : 0;
  }
}

void gibbs_sweep(Configuration& x, const ThetaVector& theta, const GridSpec& grid, Rng& rng) {
  check_theta(theta, grid);
  check_configuration(x, grid);
  gibbs_sweep_logit(x, logit(theta), grid, rng);
}

Configuration random_configuration(const GridSpec& grid, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  Configuration x(static_cast<std::size_t>(grid.num_nodes()));
  for (auto& bit : x) bit = coin(rng) ? 1 : 0;
  return x;
}

Dataset sample_dataset(const ThetaVector& theta, const GridSpec& grid, int n, Rng& rng,
                       const SamplingOptions& options) {
  check_theta(theta, grid);
  if (n < 1) throw std::invalid_argument("sample_dataset needs n >= 1");
  if (options.burn_in_sweeps < 0 || options.spacing_sweeps < 1) {
    throw std::invalid_argument("burn-in must be >= 0 and spacing >= 1");
  }
  const Eigen::VectorXd w = logit(theta);
  Configuration x = random_configuration(grid, rng);
  for (int t = 0; t < options.burn_in_sweeps; ++t) gibbs_sweep_logit(x, w, grid, rng);

  Dataset data;
  data.points.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < options.spacing_sweeps; ++t) gibbs_sweep_logit(x, w, grid, rng);
    data.points.push_back(x);
  }
  return data;
}

namespace {

// One sweep where site v takes the value [u_v < P(x_v = 1 | rest)].
void coupled_sweep(Configuration& x, const Eigen::VectorXd& w, const GridSpec& grid,
                   const double* uniforms) {
  for (int v = 0; v < grid.num_nodes(); ++v) {
    x[v] = uniforms[v] < inv_logit(site_log_odds(x, v, w, grid)) ? 1 : 0;
  }
}

}  // namespace

// Coupling from the past: the uniforms for sweep -t are fixed once drawn, and
// the horizon T doubles until the chains from the two extreme states agree at
// time 0. The common state is then an exact draw.
CoalescedSample coalesced_sample(const ThetaVector& theta, const GridSpec& grid, Rng& rng,
                                 int max_sweeps) {
  check_theta(theta, grid);
  if (max_sweeps < 1) throw std::invalid_argument("max_sweeps must be positive");
  const Eigen::VectorXd w = logit(theta);
  const int d = grid.num_nodes();
  CoalescedSample out;

  if ((theta.array() < 0.5).any()) {
    Configuration x = random_configuration(grid, rng);
    for (int t = 0; t < max_sweeps; ++t) gibbs_sweep_logit(x, w, grid, rng);
    out.state = std::move(x);
    out.sweeps_used = max_sweeps;
    return out;
  }

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // uniforms[t * d + v] drives site v during sweep -(t + 1).
  std::vector<double> uniforms;
  int horizon = 1;
  while (true) {
    const int have = static_cast<int>(uniforms.size()) / d;
    uniforms.resize(static_cast<std::size_t>(horizon) * d);
    for (std::size_t i = static_cast<std::size_t>(have) * d; i < uniforms.size(); ++i) {
      uniforms[i] = unif(rng);
    }
    Configuration lower(static_cast<std::size_t>(d), 0);
    Configuration upper(static_cast<std::size_t>(d), 1);
    for (int t = horizon - 1; t >= 0; --t) {
      const double* u = uniforms.data() + static_cast<std::size_t>(t) * d;
      coupled_sweep(lower, w, grid, u);
      coupled_sweep(upper, w, grid, u);
    }
    if (lower == upper) {
      out.state = std::move(lower);
      out.coalesced = true;
      out.sweeps_used = horizon;
      return out;
    }
    if (horizon >= max_sweeps) {
      out.state = std::move(lower);
      out.sweeps_used = horizon;
      return out;
    }
    horizon = std::min(2 * horizon, max_sweeps);
  }
}

void write_dataset(std::ostream& out, const Dataset& data, const GridSpec& grid) {
  out << grid.rows() << ' ' << grid.cols() << ' ' << data.size() << '\n';
  std::string line(static_cast<std::size_t>(grid.num_nodes()), '0');
  for (const Configuration& x : data.points) {
    check_configuration(x, grid);
    for (std::size_t i = 0; i < x.size(); ++i) line[i] = x[i] ? '1' : '0';
    out << line << '\n';
  }
}

void write_dataset_file(const std::string& path, const Dataset& data, const GridSpec& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_dataset(out, data, grid);
  if (!out) throw std::runtime_error("failed writing " + path);
}

LoadedDataset read_dataset(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("dataset: missing header");
  std::istringstream hs(header);
  int rows = 0, cols = 0;
  long long n = -1;
  if (!(hs >> rows >> cols >> n) || n < 0) {
    throw std::runtime_error("dataset: malformed header '" + header + "'");
  }
  LoadedDataset loaded{GridSpec(rows, cols), {}};
  const auto d = static_cast<std::size_t>(rows * cols);
  loaded.data.points.reserve(static_cast<std::size_t>(n));
  std::string line;
  for (long long i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("dataset: truncated body");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() != d) throw std::runtime_error("dataset: line length differs from rows*cols");
    Configuration x(d);
    for (std::size_t k = 0; k < d; ++k) {
      if (line[k] != '0' && line[k] != '1') throw std::runtime_error("dataset: non-binary character");
      x[k] = line[k] == '1' ? 1 : 0;
    }
    loaded.data.points.push_back(std::move(x));
  }
  return loaded;
}

LoadedDataset read_dataset_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_dataset(in);
}

}  // namespace mrflab
