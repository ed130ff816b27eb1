#include "mrflab/mle_likelihood.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <string>

namespace mrflab {

namespace {

void check_open_unit(double value, const char* what) {
  if (!(value > 0.0 && value < 1.0)) {
    throw std::domain_error(std::string(what) + " must lie in (0, 1)");
  }
}

// a * log(y) with 0 * log(0) = 0.
double xlogy(double a, double y) { return a == 0.0 ? 0.0 : a * std::log(y); }

}  // namespace

double lambda_of(double theta, double eta) {
  check_open_unit(theta, "theta");
  check_open_unit(eta, "eta");
  const double num = eta * theta;
  return num / (num + (1.0 - eta) * (1.0 - theta));
}

double lambda_mle(int alpha0, int n) {
  if (n < 1) throw std::invalid_argument("lambda_mle needs n >= 1");
  if (alpha0 < 0 || alpha0 > n) throw std::invalid_argument("alpha0 must lie in [0, n]");
  const double floor = 0.5 / n;
  return std::clamp(static_cast<double>(alpha0) / n, floor, 1.0 - floor);
}

double eta0_of(double lambda_hat, double theta_hat) {
  check_open_unit(lambda_hat, "lambda_hat");
  check_open_unit(theta_hat, "theta_hat");
  const double denom = lambda_hat + theta_hat - 2.0 * lambda_hat * theta_hat;
  if (!(denom > 0.0)) throw std::domain_error("eta0_of: non-positive denominator");
  return lambda_hat * (1.0 - theta_hat) / denom;
}

MarginalCoinModel make_marginal(double eta0, int alpha0, int n) {
  check_open_unit(eta0, "eta0");
  if (n < 0 || alpha0 < 0 || alpha0 > n) {
    throw std::invalid_argument("marginal needs 0 <= alpha0 <= n");
  }
  MarginalCoinModel m;
  m.eta0 = eta0;
  m.alpha0 = alpha0;
  m.n = n;
  m.log_binom = std::lgamma(n + 1.0) - std::lgamma(alpha0 + 1.0) - std::lgamma(n - alpha0 + 1.0);
  return m;
}

namespace {

double marginal_constant(const MarginalCoinModel& m) {
  const double a = m.alpha0;
  const double b = m.n - m.alpha0;
  return m.log_binom + xlogy(a, m.eta0) + xlogy(b, 1.0 - m.eta0);
}

// Also defined at theta in {0, 1} through the 0 log 0 = 0 limit.
double log_marginal_closed(double theta, const MarginalCoinModel& m, double constant) {
  const double a = m.alpha0;
  const double b = m.n - m.alpha0;
  const double mix = m.eta0 * theta + (1.0 - m.eta0) * (1.0 - theta);
  return constant + xlogy(a, theta) + xlogy(b, 1.0 - theta) - m.n * std::log(mix);
}

}  // namespace

double log_marginal_likelihood(double theta, const MarginalCoinModel& m) {
  check_open_unit(theta, "theta");
  return log_marginal_closed(theta, m, marginal_constant(m));
}

CdfTable::CdfTable(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) throw std::invalid_argument("cdf table needs at least two nodes");
  spacing_ = 1.0 / static_cast<double>(values_.size() - 1);
}

double CdfTable::operator()(double theta) const {
  if (theta <= 0.0) return values_.front();
  if (theta >= 1.0) return values_.back();
  const double pos = theta / spacing_;
  const auto i = std::min(static_cast<std::size_t>(pos), values_.size() - 2);
  const double frac = pos - static_cast<double>(i);
  return values_[i] + frac * (values_[i + 1] - values_[i]);
}

CdfTable standardize_cdf(const MarginalCoinModel& m, int grid_size) {
  if (grid_size < 256) throw std::invalid_argument("cdf grid needs at least 256 points");
  const auto size = static_cast<std::size_t>(grid_size);
  const double h = 1.0 / static_cast<double>(size - 1);
  const double constant = marginal_constant(m);

  std::vector<double> density(size);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < size; ++i) {
    const double theta = i + 1 == size ? 1.0 : static_cast<double>(i) * h;
    density[i] = log_marginal_closed(theta, m, constant);
    peak = std::max(peak, density[i]);
  }
  for (double& f : density) f = std::exp(f - peak);

  // Cell [i, i+1] integrates the quadratic through three neighbouring nodes;
  // adjacent pairs of cells add up to the composite Simpson panel.
  std::vector<double> cdf(size, 0.0);
  for (std::size_t i = 0; i + 1 < size; ++i) {
    double cell;
    if (i + 2 < size) {
      cell = h / 12.0 * (5.0 * density[i] + 8.0 * density[i + 1] - density[i + 2]);
    } else {
      cell = h / 12.0 * (-density[i - 1] + 8.0 * density[i] + 5.0 * density[i + 1]);
    }
    cdf[i + 1] = cdf[i] + std::max(cell, 0.0);
  }
  const double total = cdf.back();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::runtime_error("standardize_cdf: marginal likelihood has no mass on the grid");
  }
  const double outer = cdf[1] + (total - cdf[size - 2]);
  if (outer > 1e-3 * total) {
    throw std::runtime_error("standardize_cdf: grid resolution insufficient, " +
                             std::to_string(outer / total) +
                             " of the mass lies in the outermost cells");
  }
  for (double& c : cdf) c /= total;
  cdf.back() = 1.0;
  return CdfTable(std::move(cdf));
}

namespace {

// Rational approximation with relative error about 1.15e-9 (P. J. Acklam).
double quantile_rational(double u) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double low = 0.02425;
  if (u < low) {
    const double q = std::sqrt(-2.0 * std::log(u));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = u - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double u) {
  u = std::clamp(u, 1e-12, 1.0 - 1e-12);
  if (u > 0.5) return -normal_quantile(1.0 - u);
  double x = quantile_rational(u);
  // Newton step on Phi(x) = u.
  constexpr double sqrt_two_pi = 2.5066282746310002;
  const double err = normal_cdf(x) - u;
  x -= err * sqrt_two_pi * std::exp(0.5 * x * x);
  return x;
}

void check_copula(const CopulaSpec& spec) {
  if (spec.p < 1) throw std::invalid_argument("copula dimension must be positive");
  const double lower = spec.p > 1 ? -1.0 / (spec.p - 1.0) : -1.0;
  if (!(spec.rho > lower && spec.rho < 1.0)) {
    throw std::domain_error("copula correlation " + std::to_string(spec.rho) +
                            " outside the positive-definite range");
  }
}

MleLikelihoodModel::MleLikelihoodModel(std::vector<MarginalCoinModel> marginals,
                                       CopulaSpec copula, std::vector<CdfTable> cdf_tables)
    : marginals_(std::move(marginals)), copula_(copula), cdf_tables_(std::move(cdf_tables)) {
  if (copula_.p != num_params()) throw std::invalid_argument("copula dimension mismatch");
  check_copula(copula_);
  if (!copula_.independent() && cdf_tables_.size() != marginals_.size()) {
    throw std::invalid_argument("a correlated copula needs one cdf table per marginal");
  }
  constant_.resize(num_params());
  for (int j = 0; j < num_params(); ++j) constant_[j] = marginal_constant(marginals_[j]);
}

double MleLikelihoodModel::log_marginal_sum(const ThetaVector& theta) const {
  if (theta.size() != num_params()) throw std::invalid_argument("theta length mismatch");
  if (!theta_in_open_unit_box(theta)) throw std::domain_error("theta components must lie in (0, 1)");
  double total = 0.0;
  for (int j = 0; j < num_params(); ++j) {
    total += log_marginal_closed(theta[j], marginals_[j], constant_[j]);
  }
  return total;
}

Eigen::VectorXd MleLikelihoodModel::copula_coordinates(const ThetaVector& theta) const {
  if (cdf_tables_.size() != marginals_.size()) {
    throw std::logic_error("model was built without cdf tables");
  }
  Eigen::VectorXd u(num_params());
  for (int j = 0; j < num_params(); ++j) u[j] = normal_quantile(cdf_tables_[j](theta[j]));
  return u;
}

double log_joint_likelihood(const ThetaVector& theta, const MleLikelihoodModel& model) {
  const double marginals = model.log_marginal_sum(theta);
  if (model.copula().independent()) return marginals;
  return marginals + log_gaussian_copula_density(model.copula_coordinates(theta), model.copula());
}

MleLikelihoodModel build_model(const SufficientStats& stats, const ThetaVector& theta_hat,
                               double rho, const MleLikelihoodOptions& options) {
  const auto p = static_cast<int>(theta_hat.size());
  if (stats.agree.size() != p) throw std::invalid_argument("statistics and theta_hat differ in length");
  if (stats.n < 1) throw std::invalid_argument("build_model needs at least one observation");
  if (!theta_in_open_unit_box(theta_hat)) throw std::domain_error("theta_hat must lie in (0, 1)");
  const CopulaSpec copula{rho, p};
  check_copula(copula);

  std::vector<MarginalCoinModel> marginals;
  std::vector<CdfTable> tables;
  marginals.reserve(static_cast<std::size_t>(p));
  tables.reserve(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) {
    const double lambda_hat = lambda_mle(stats.agree[j], stats.n);
    const double eta0 = eta0_of(lambda_hat, theta_hat[j]);
    marginals.push_back(make_marginal(eta0, stats.agree[j], stats.n));
    tables.push_back(standardize_cdf(marginals.back(), options.cdf_grid_size));
  }
  return MleLikelihoodModel(std::move(marginals), copula, std::move(tables));
}

MleLikelihoodModel build_model(const Dataset& data, const ThetaVector& theta_hat,
                               const GridSpec& grid, double rho,
                               const MleLikelihoodOptions& options) {
  check_theta(theta_hat, grid);
  return build_model(sufficient_stats(data, grid), theta_hat, rho, options);
}

void write_model_dump(std::ostream& out, const MleLikelihoodModel& model,
                      const ThetaVector& theta_hat) {
  out << "edge_index,alpha0,n,lambda_hat,theta_hat,eta0\n";
  const auto old_precision = out.precision(17);
  for (int j = 0; j < model.num_params(); ++j) {
    const MarginalCoinModel& m = model.marginals()[j];
    out << j << ',' << m.alpha0 << ',' << m.n << ',' << lambda_mle(m.alpha0, m.n) << ','
        << theta_hat[j] << ',' << m.eta0 << '\n';
  }
  out.precision(old_precision);
}

}  // namespace mrflab
