// Experiment runner behind the mrflab command line.

#ifndef MRFLAB_EXPERIMENT_HPP
#define MRFLAB_EXPERIMENT_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrflab/mh.hpp"
#include "mrflab/mle.hpp"
#include "mrflab/model.hpp"

namespace mrflab {

/// Invalid or unreadable configuration (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> methods = {"exact",     "mle-L",        "pseudo-L",
                                                   "laplace-L", "is-geometric", "auxvar",
                                                   "exch",      "persist-mc"};
  return methods;
}

struct ExperimentConfig {
  int rows = 4;
  int cols = 4;
  double theta_low = 0.5;
  double theta_high = 0.8;
  std::uint64_t theta_seed = 1;
  std::vector<int> n_values;
  std::vector<std::string> methods;
  std::vector<double> copula_rho = {0.0};
  MhConfig mh;
  std::map<int, double> sigma_q2_by_n;  // per-sample-size proposal variance overrides
  PoolSettings particles;
  int replicates = 1;
  std::string out_dir = "out";
  CdConfig cd;
  SamplingOptions data_sampling;
  LaplaceOptions laplace;
  bool record_runtime = true;
  bool chain_dump = false;
  int jobs = 1;
};

/// Parses the JSON config text. Unknown methods, empty grids and
/// non-positive n values raise ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Deterministic stream seed derived from a root seed and a list of tags.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> tags);

/// Ground-truth parameters of one replicate.
ThetaVector draw_true_theta(const ExperimentConfig& config, int replicate);

std::string dataset_path(const ExperimentConfig& config, int replicate, int n);
std::string truth_path(const ExperimentConfig& config, int replicate);

void cmd_generate(const ExperimentConfig& config);
void cmd_fit_mle(const ExperimentConfig& config);
void cmd_posterior(const ExperimentConfig& config);
void cmd_exact_z(const ExperimentConfig& config, std::ostream& out);
void cmd_report(const ExperimentConfig& config);

struct ReportRow {
  std::string method;
  int replicate = 0;
  int n = 0;
  std::optional<double> rho;
  int param_index = 0;
  double true_theta = 0.0;
  std::optional<double> post_mean;  // empty for skip records
  std::optional<double> post_sd;
  std::optional<double> ref_post_mean;
  std::optional<double> runtime_ms;
  std::optional<double> acceptance_rate;
  std::string skip_reason;
};

inline constexpr const char* kReportHeader =
    "method,replicate,n,rho,param_index,true_theta,post_mean,post_sd,ref_post_mean,runtime_ms,"
    "acceptance_rate";

void write_report(std::ostream& out, const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_report(std::istream& in);

struct SummaryRow {
  std::string label;  // method, with the copula rho appended for mle-L
  int n = 0;
  double mean_abs_mean_error = 0.0;
  std::optional<double> mean_abs_sd_error;
  std::optional<double> mean_runtime_ms;
  double mean_acceptance_rate = 0.0;
  std::string reference;  // "exact" or "truth"
};

/// Per (method, rho, n): mean over replicates and parameters of
/// |post_mean - ref| and |post_sd - ref_sd|, with exact-strategy rows as the
/// reference when present and the true theta otherwise.
std::vector<SummaryRow> summarize_report(const std::vector<ReportRow>& rows);

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_runtime_table(std::ostream& out, const std::vector<SummaryRow>& rows);

/// Line chart of one metric against n, one series per label.
void write_line_chart_svg(std::ostream& out, const std::string& title, const std::string& y_label,
                          const std::map<std::string, std::vector<std::pair<double, double>>>& series);

}  // namespace mrflab

#endif  // MRFLAB_EXPERIMENT_HPP
