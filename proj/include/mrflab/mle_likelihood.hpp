// MLE-induced likelihood.
//
// Each edge parameter gets a one-dimensional likelihood taken from a coin whose
// head probability theta is pulled by an external effect eta0:
//
//   lambda(theta, eta0) = eta0 theta / (eta0 theta + (1 - eta0)(1 - theta))
//   L(theta) = C(n, a) eta0^a (1 - eta0)^(n - a) theta^a (1 - theta)^(n - a)
//              / (eta0 theta + (1 - eta0)(1 - theta))^n
//
// where a is the number of observations whose edge endpoints agree. eta0 is
// chosen so that lambda(theta_hat) equals the empirical agreement rate, which
// puts the mode of L exactly at the joint MLE theta_hat. The per-edge
// likelihoods are then coupled with an exchangeable Gaussian copula.

#ifndef MRFLAB_MLE_LIKELIHOOD_HPP
#define MRFLAB_MLE_LIKELIHOOD_HPP

#include <cmath>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "mrflab/model.hpp"

namespace mrflab {

double lambda_of(double theta, double eta);

/// alpha0 / n clamped to [1/(2n), 1 - 1/(2n)].
double lambda_mle(int alpha0, int n);

/// Solves lambda_of(theta_hat, eta0) = lambda_hat for eta0.
double eta0_of(double lambda_hat, double theta_hat);

struct MarginalCoinModel {
  double eta0 = 0.5;
  int alpha0 = 0;
  int n = 0;
  double log_binom = 0.0;
};

MarginalCoinModel make_marginal(double eta0, int alpha0, int n);

double log_marginal_likelihood(double theta, const MarginalCoinModel& m);

/// Cumulative distribution of a standardized marginal likelihood, tabulated on
/// a uniform grid over [0, 1] and linearly interpolated between nodes.
class CdfTable {
 public:
  CdfTable() = default;
  explicit CdfTable(std::vector<double> values);

  double operator()(double theta) const;
  const std::vector<double>& values() const { return values_; }
  double spacing() const { return spacing_; }

 private:
  std::vector<double> values_;
  double spacing_ = 0.0;
};

inline constexpr int kDefaultCdfGridSize = 4096;

/// Normalizes exp(log_marginal_likelihood) over (0, 1) with composite Simpson
/// weights in max-shifted log space. Throws std::runtime_error when more than
/// 1e-3 of the mass sits in the two outermost cells.
CdfTable standardize_cdf(const MarginalCoinModel& m, int grid_size = kDefaultCdfGridSize);

/// Standard normal quantile. Inputs are clamped to [1e-12, 1 - 1e-12].
double normal_quantile(double u);

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

struct CopulaSpec {
  double rho = 0.0;
  int p = 1;

  bool independent() const { return rho == 0.0; }
};

/// Throws std::domain_error unless the exchangeable correlation matrix is
/// positive definite, i.e. rho in (-1/(p-1), 1).
void check_copula(const CopulaSpec& spec);

/// log c_R(u) = -1/2 log det R - 1/2 u^T (R^{-1} - I) u for the exchangeable R,
/// evaluated in O(p) from the closed-form determinant and inverse.
template <typename Derived>
double log_gaussian_copula_density(const Eigen::MatrixBase<Derived>& u, const CopulaSpec& spec) {
  check_copula(spec);
  if (u.size() != spec.p) throw std::invalid_argument("copula dimension mismatch");
  const double rho = spec.rho;
  if (rho == 0.0) return 0.0;
  const double p = spec.p;
  const double denom = 1.0 + (p - 1.0) * rho;
  const double log_det = (p - 1.0) * std::log1p(-rho) + std::log(denom);
  const double sum = u.sum();
  const double sum_sq = u.squaredNorm();
  // u^T R^{-1} u = |u|^2 / (1 - rho) - rho (sum u)^2 / ((1 - rho)(1 + (p - 1) rho))
  const double quad = sum_sq / (1.0 - rho) - rho * sum * sum / ((1.0 - rho) * denom);
  return -0.5 * log_det - 0.5 * (quad - sum_sq);
}

struct MleLikelihoodOptions {
  int cdf_grid_size = kDefaultCdfGridSize;
};

class MleLikelihoodModel {
 public:
  MleLikelihoodModel(std::vector<MarginalCoinModel> marginals, CopulaSpec copula,
                     std::vector<CdfTable> cdf_tables);

  int num_params() const { return static_cast<int>(marginals_.size()); }
  const std::vector<MarginalCoinModel>& marginals() const { return marginals_; }
  const CopulaSpec& copula() const { return copula_; }
  const std::vector<CdfTable>& cdf_tables() const { return cdf_tables_; }

  /// Sum of the per-edge log marginal likelihoods.
  double log_marginal_sum(const ThetaVector& theta) const;

  /// Transformed coordinates u_j = Phi^{-1}(F_j(theta_j)).
  Eigen::VectorXd copula_coordinates(const ThetaVector& theta) const;

 private:
  std::vector<MarginalCoinModel> marginals_;
  CopulaSpec copula_;
  std::vector<CdfTable> cdf_tables_;
  // log_binom + a log eta0 + (n - a) log(1 - eta0), per edge.
  Eigen::VectorXd constant_;
};

double log_joint_likelihood(const ThetaVector& theta, const MleLikelihoodModel& model);

MleLikelihoodModel build_model(const SufficientStats& stats, const ThetaVector& theta_hat,
                               double rho, const MleLikelihoodOptions& options = {});

MleLikelihoodModel build_model(const Dataset& data, const ThetaVector& theta_hat,
                               const GridSpec& grid, double rho,
                               const MleLikelihoodOptions& options = {});

/// Debug dump: edge_index,alpha0,n,lambda_hat,theta_hat,eta0
void write_model_dump(std::ostream& out, const MleLikelihoodModel& model,
                      const ThetaVector& theta_hat);

}  // namespace mrflab

#endif  // MRFLAB_MLE_LIKELIHOOD_HPP
