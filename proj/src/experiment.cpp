#include "mrflab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mrflab/baselines_likelihood.hpp"
#include "mrflab/exact.hpp"
#include "mrflab/mle_likelihood.hpp"

namespace mrflab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

const json& require(const json& obj, const char* key) {
  if (!obj.contains(key)) throw ConfigError(std::string("config is missing '") + key + "'");
  return obj.at(key);
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");

  ExperimentConfig cfg;
  try {
    const json& grid = require(root, "grid");
    cfg.rows = require(grid, "rows").get<int>();
    cfg.cols = require(grid, "cols").get<int>();
    if (cfg.rows < 1 || cfg.cols < 1 || cfg.rows * cfg.cols < 2) {
      throw ConfigError("grid must have positive dimensions and at least two nodes");
    }

    if (root.contains("theta_gen")) {
      const json& tg = root.at("theta_gen");
      cfg.theta_low = get_or(tg, "low", cfg.theta_low);
      cfg.theta_high = get_or(tg, "high", cfg.theta_high);
      cfg.theta_seed = get_or<std::uint64_t>(tg, "seed", cfg.theta_seed);
    }
    if (!(cfg.theta_low > 0.0 && cfg.theta_low < cfg.theta_high && cfg.theta_high < 1.0)) {
      throw ConfigError("theta_gen needs 0 < low < high < 1");
    }

    cfg.n_values = get_or(root, "n_values", std::vector<int>{});
    for (int n : cfg.n_values) {
      if (n < 1) throw ConfigError("n_values must be positive");
    }
    cfg.methods = get_or(root, "methods", std::vector<std::string>{});
    for (const auto& m : cfg.methods) {
      if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end()) {
        throw ConfigError("unknown method '" + m + "'");
      }
    }
    cfg.copula_rho = get_or(root, "copula_rho", cfg.copula_rho);
    if (cfg.copula_rho.empty()) throw ConfigError("copula_rho must list at least one value");

    if (root.contains("mh")) {
      const json& mh = root.at("mh");
      cfg.mh.steps = get_or(mh, "steps", cfg.mh.steps);
      cfg.mh.sigma_q2 = get_or(mh, "sigma_q2", cfg.mh.sigma_q2);
      cfg.mh.prior_low = get_or(mh, "prior_low", cfg.mh.prior_low);
      cfg.mh.prior_high = get_or(mh, "prior_high", cfg.mh.prior_high);
      cfg.mh.burn_in_fraction = get_or(mh, "burn_in_fraction", cfg.mh.burn_in_fraction);
      cfg.mh.thin = get_or(mh, "thin", cfg.mh.thin);
      cfg.mh.seed = get_or<std::uint64_t>(mh, "seed", cfg.mh.seed);
      if (mh.contains("sigma_q2_by_n")) {
        for (const auto& [key, value] : mh.at("sigma_q2_by_n").items()) {
          std::size_t used = 0;
          int n = 0;
          try {
            n = std::stoi(key, &used);
          } catch (const std::exception&) {
            used = 0;
          }
          if (used != key.size() || n < 1) throw ConfigError("mh.sigma_q2_by_n: bad sample size '" + key + "'");
          const double v = value.get<double>();
          if (!(v > 0.0)) throw ConfigError("mh.sigma_q2_by_n: variances must be positive");
          cfg.sigma_q2_by_n[n] = v;
        }
      }
    }
    try {
      check_mh_config(cfg.mh);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("mh: ") + e.what());
    }

    if (root.contains("particles")) {
      const json& pc = root.at("particles");
      cfg.particles.particles = get_or(pc, "count", cfg.particles.particles);
      cfg.particles.advance_sweeps = get_or(pc, "advance_sweeps", cfg.particles.advance_sweeps);
      cfg.particles.k = get_or(pc, "k", cfg.particles.k);
    }
    if (cfg.particles.particles < 1 || cfg.particles.advance_sweeps < 0 || cfg.particles.k < 1) {
      throw ConfigError("particles: count and k must be positive, advance_sweeps non-negative");
    }

    cfg.replicates = get_or(root, "replicates", cfg.replicates);
    if (cfg.replicates < 1) throw ConfigError("replicates must be positive");
    cfg.out_dir = get_or(root, "out_dir", cfg.out_dir);

    if (root.contains("cd")) {
      const json& cd = root.at("cd");
      cfg.cd.k = get_or(cd, "k", cfg.cd.k);
      cfg.cd.step_size = get_or(cd, "step_size", cfg.cd.step_size);
      cfg.cd.max_iters = get_or(cd, "max_iters", cfg.cd.max_iters);
      cfg.cd.num_particles = get_or(cd, "num_particles", cfg.cd.num_particles);
      cfg.cd.persistent = get_or(cd, "persistent", cfg.cd.persistent);
      cfg.cd.grad_tol = get_or(cd, "grad_tol", cfg.cd.grad_tol);
      cfg.cd.average_tail = get_or(cd, "average_tail", cfg.cd.average_tail);
    }
    if (root.contains("data")) {
      const json& data = root.at("data");
      cfg.data_sampling.burn_in_sweeps = get_or(data, "burn_in_sweeps", cfg.data_sampling.burn_in_sweeps);
      cfg.data_sampling.spacing_sweeps = get_or(data, "spacing_sweeps", cfg.data_sampling.spacing_sweeps);
    }
    if (root.contains("laplace")) {
      const json& lp = root.at("laplace");
      cfg.laplace.sample_budget = get_or(lp, "sample_budget", cfg.laplace.sample_budget);
      cfg.laplace.burn_in_sweeps = get_or(lp, "burn_in_sweeps", cfg.laplace.burn_in_sweeps);
    }
    cfg.record_runtime = get_or(root, "record_runtime", cfg.record_runtime);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

// splitmix64 finalizer folded over the tags.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> tags) {
  const auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t state = mix(root);
  for (std::uint64_t tag : tags) state = mix(state ^ mix(tag));
  return state;
}

ThetaVector draw_true_theta(const ExperimentConfig& config, int replicate) {
  const GridSpec grid(config.rows, config.cols);
  Rng rng(derive_seed(config.theta_seed, {0, static_cast<std::uint64_t>(replicate)}));
  std::uniform_real_distribution<double> unif(config.theta_low, config.theta_high);
  ThetaVector theta(grid.num_params());
  for (Eigen::Index j = 0; j < theta.size(); ++j) theta[j] = unif(rng);
  return theta;
}

std::string dataset_path(const ExperimentConfig& config, int replicate, int n) {
  return (fs::path(config.out_dir) / "data" /
          ("rep" + std::to_string(replicate) + "_n" + std::to_string(n) + ".mrfdat"))
      .string();
}

std::string truth_path(const ExperimentConfig& config, int replicate) {
  return (fs::path(config.out_dir) / "data" / ("rep" + std::to_string(replicate) + ".theta.csv")).string();
}

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

ThetaVector read_theta_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing " + path + " (run generate first)");
  return read_theta_csv(in);
}

int resolve_jobs(int requested) { return std::max(1, requested); }

// Runs body(i) for i in [0, count) on up to `jobs` threads.
template <typename Body>
void parallel_for(std::size_t count, int jobs, Body body) {
  const auto workers = static_cast<std::size_t>(std::min<std::size_t>(resolve_jobs(jobs), std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct DatasetCell {
  int replicate;
  int n;
  Dataset data;
  SufficientStats stats;
  ThetaVector truth;
  std::optional<ThetaVector> theta_hat;
};

bool method_needs_mle(const std::string& method) {
  return method == "mle-L" || method == "laplace-L" || method == "auxvar";
}

std::vector<DatasetCell> load_datasets(const ExperimentConfig& config, const GridSpec& grid) {
  std::vector<DatasetCell> cells;
  for (int r = 0; r < config.replicates; ++r) {
    const ThetaVector truth = read_theta_file(truth_path(config, r));
    if (truth.size() != grid.num_params()) throw std::runtime_error("truth file does not match grid");
    for (int n : config.n_values) {
      LoadedDataset loaded = read_dataset_file(dataset_path(config, r, n));
      if (!(loaded.grid == grid)) throw std::runtime_error("dataset grid differs from config grid");
      DatasetCell cell{r, n, std::move(loaded.data), {}, truth, std::nullopt};
      cell.stats = sufficient_stats(cell.data, grid);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

MleResult fit_cell_mle(const ExperimentConfig& config, const DatasetCell& cell, const GridSpec& grid) {
  CdConfig cd = config.cd;
  cd.seed = derive_seed(config.theta_seed, {2, static_cast<std::uint64_t>(cell.replicate),
                                            static_cast<std::uint64_t>(cell.n)});
  return fit_mle(cell.data, grid, cd);
}

struct MethodVariant {
  std::string method;
  std::optional<double> rho;
  std::size_t method_index;
};

std::vector<MethodVariant> expand_methods(const ExperimentConfig& config) {
  std::vector<MethodVariant> out;
  for (std::size_t i = 0; i < config.methods.size(); ++i) {
    const std::string& m = config.methods[i];
    if (m == "mle-L") {
      for (double rho : config.copula_rho) out.push_back({m, rho, i});
    } else {
      out.push_back({m, std::nullopt, i});
    }
  }
  return out;
}

std::unique_ptr<RatioStrategy> make_strategy(const ExperimentConfig& config, const MethodVariant& variant,
                                             const DatasetCell& cell, const GridSpec& grid) {
  const auto r = static_cast<std::uint64_t>(cell.replicate);
  const auto n = static_cast<std::uint64_t>(cell.n);
  PoolSettings pools = config.particles;
  pools.seed = derive_seed(config.theta_seed, {4, r, n, variant.method_index});
  const std::string& m = variant.method;
  if (m == "exact") return std::make_unique<ExactLikelihoodStrategy>(cell.stats, grid);
  if (m == "mle-L") {
    return std::make_unique<MleLikelihoodStrategy>(build_model(cell.stats, *cell.theta_hat, *variant.rho));
  }
  if (m == "pseudo-L") return std::make_unique<PseudoLikelihoodStrategy>(cell.data, grid);
  if (m == "laplace-L") {
    Rng rng(derive_seed(config.theta_seed, {3, r, n}));
    return std::make_unique<LaplaceLikelihoodStrategy>(
        fit_laplace(*cell.theta_hat, grid, rng, config.laplace, &cell.stats), cell.stats);
  }
  if (m == "is-geometric") return std::make_unique<IsGeometricStrategy>(cell.stats, grid, pools);
  if (m == "auxvar") return std::make_unique<AuxVarStrategy>(cell.stats, grid, *cell.theta_hat, pools);
  if (m == "exch") return std::make_unique<ExchangeStrategy>(cell.stats, grid, pools);
  if (m == "persist-mc") return std::make_unique<PersistentChainStrategy>(cell.stats, grid, pools);
  throw ConfigError("unknown method '" + m + "'");
}

std::string variant_label(const MethodVariant& v) {
  return v.rho ? v.method + "_rho" + format_double(*v.rho) : v.method;
}

}  // namespace

void cmd_generate(const ExperimentConfig& config) {
  const GridSpec grid(config.rows, config.cols);
  ensure_dir(fs::path(config.out_dir) / "data");
  for (int r = 0; r < config.replicates; ++r) {
    const ThetaVector truth = draw_true_theta(config, r);
    {
      auto out = open_output(truth_path(config, r));
      write_theta_csv(out, truth, "true_theta");
    }
    for (int n : config.n_values) {
      Rng rng(derive_seed(config.theta_seed, {1, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(n)}));
      const Dataset data = sample_dataset(truth, grid, n, rng, config.data_sampling);
      write_dataset_file(dataset_path(config, r, n), data, grid);
    }
  }
}

void cmd_fit_mle(const ExperimentConfig& config) {
  const GridSpec grid(config.rows, config.cols);
  std::vector<DatasetCell> cells = load_datasets(config, grid);
  const fs::path dir = fs::path(config.out_dir) / "mle";
  ensure_dir(dir);
  parallel_for(cells.size(), config.jobs, [&](std::size_t i) {
    const DatasetCell& cell = cells[i];
    const MleResult fit = fit_cell_mle(config, cell, grid);
    const std::string stem = "rep" + std::to_string(cell.replicate) + "_n" + std::to_string(cell.n);
    {
      auto out = open_output(dir / (stem + ".csv"));
      write_theta_csv(out, fit.theta_hat);
    }
    auto dump = open_output(dir / (stem + ".model.csv"));
    write_model_dump(dump, build_model(cell.stats, fit.theta_hat, 0.0), fit.theta_hat);
  });
}

void cmd_posterior(const ExperimentConfig& config) {
  const GridSpec grid(config.rows, config.cols);
  const int p = grid.num_params();
  std::vector<DatasetCell> datasets = load_datasets(config, grid);
  const std::vector<MethodVariant> variants = expand_methods(config);
  ensure_dir(config.out_dir);

  const bool any_mle = std::any_of(config.methods.begin(), config.methods.end(), method_needs_mle);
  if (any_mle) {
    parallel_for(datasets.size(), config.jobs, [&](std::size_t i) {
      datasets[i].theta_hat = fit_cell_mle(config, datasets[i], grid).theta_hat;
    });
  }

  struct CellResult {
    std::optional<PosteriorSummary> summary;
    double runtime_ms = 0.0;
    double setup_ms = 0.0;
    double acceptance = 0.0;
    std::string skip_reason;
  };
  const std::size_t num_cells = datasets.size() * variants.size();
  std::vector<CellResult> results(num_cells);
  if (config.chain_dump) ensure_dir(fs::path(config.out_dir) / "chains");

  parallel_for(num_cells, config.jobs, [&](std::size_t idx) {
    const DatasetCell& cell = datasets[idx / variants.size()];
    const MethodVariant& variant = variants[idx % variants.size()];
    CellResult& result = results[idx];
    std::unique_ptr<RatioStrategy> strategy;
    const auto setup_start = std::chrono::steady_clock::now();
    try {
      strategy = make_strategy(config, variant, cell, grid);
    } catch (const std::exception& e) {
      result.skip_reason = e.what();
      return;
    }
    result.setup_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - setup_start).count();
    MhConfig mh = config.mh;
    if (const auto it = config.sigma_q2_by_n.find(cell.n); it != config.sigma_q2_by_n.end()) mh.sigma_q2 = it->second;
    mh.seed = derive_seed(config.mh.seed, {static_cast<std::uint64_t>(cell.replicate),
                                           static_cast<std::uint64_t>(cell.n)});
    const PosteriorSamples samples = run_chain(mh, *strategy, default_start(mh, p));
    result.summary = posterior_summary(samples);
    result.runtime_ms = samples.runtime_ms;
    result.acceptance = samples.acceptance_rate();
    if (config.chain_dump) {
      auto out = open_output(fs::path(config.out_dir) / "chains" /
                             (variant_label(variant) + "_rep" + std::to_string(cell.replicate) + "_n" +
                              std::to_string(cell.n) + ".csv"));
      write_chain_csv(out, samples, mh);
    }
  });

  std::vector<ReportRow> rows;
  std::ostringstream setup;
  setup << "method,replicate,n,rho,setup_ms,runtime_ms\n";
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const DatasetCell& cell = datasets[d];
    const CellResult* exact = nullptr;
    for (std::size_t v = 0; v < variants.size(); ++v) {
      if (variants[v].method == "exact" && results[d * variants.size() + v].summary) {
        exact = &results[d * variants.size() + v];
      }
    }
    for (std::size_t v = 0; v < variants.size(); ++v) {
      const CellResult& res = results[d * variants.size() + v];
      ReportRow base;
      base.method = variants[v].method;
      base.replicate = cell.replicate;
      base.n = cell.n;
      base.rho = variants[v].rho;
      if (!res.summary) {
        base.param_index = -1;
        base.true_theta = std::nan("");
        base.skip_reason = res.skip_reason.empty() ? "skipped" : res.skip_reason;
        rows.push_back(base);
        continue;
      }
      if (config.record_runtime) {
        setup << base.method << ',' << base.replicate << ',' << base.n << ',' << format_optional(base.rho)
              << ',' << format_double(res.setup_ms) << ',' << format_double(res.runtime_ms) << '\n';
      }
      for (int j = 0; j < p; ++j) {
        ReportRow row = base;
        row.param_index = j;
        row.true_theta = cell.truth[j];
        row.post_mean = res.summary->mean[j];
        row.post_sd = res.summary->sd[j];
        if (exact) row.ref_post_mean = exact->summary->mean[j];
        if (config.record_runtime) row.runtime_ms = res.runtime_ms;
        row.acceptance_rate = res.acceptance;
        rows.push_back(std::move(row));
      }
    }
  }

  {
    auto out = open_output(fs::path(config.out_dir) / "report.csv");
    write_report(out, rows);
  }
  if (config.record_runtime) {
    auto out = open_output(fs::path(config.out_dir) / "setup_timing.csv");
    out << setup.str();
  }
}

void cmd_exact_z(const ExperimentConfig& config, std::ostream& out) {
  const GridSpec grid(config.rows, config.cols);
  out << "replicate,log_z\n";
  char buf[64];
  for (int r = 0; r < config.replicates; ++r) {
    const ExactResult z = exact_log_z(draw_true_theta(config, r), grid);
    std::snprintf(buf, sizeof buf, "%.12g", z.log_z);
    out << r << ',' << buf << '\n';
  }
}

void write_report(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << kReportHeader << '\n';
  for (const ReportRow& row : rows) {
    out << row.method << ',' << row.replicate << ',' << row.n << ',' << format_optional(row.rho) << ','
        << row.param_index << ',';
    if (!row.skip_reason.empty()) {
      // Skip record: the reason sits in the post_mean column, quoted.
      std::string reason = row.skip_reason;
      std::replace(reason.begin(), reason.end(), '"', '\'');
      out << ",\"skipped: " << reason << "\",,,,\n";
      continue;
    }
    out << format_double(row.true_theta) << ',' << format_optional(row.post_mean) << ','
        << format_optional(row.post_sd) << ',' << format_optional(row.ref_post_mean) << ','
        << format_optional(row.runtime_ms) << ',' << format_optional(row.acceptance_rate) << '\n';
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      fields.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(field);
  return fields;
}

std::optional<double> parse_optional(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::runtime_error("report: malformed number '" + s + "'");
  return v;
}

}  // namespace

std::vector<ReportRow> read_report(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) {
    throw std::runtime_error("report: header does not match the expected columns");
  }
  std::vector<ReportRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 11) {
      throw std::runtime_error("report line " + std::to_string(line_no) + ": expected 11 fields");
    }
    try {
      ReportRow row;
      row.method = f[0];
      row.replicate = std::stoi(f[1]);
      row.n = std::stoi(f[2]);
      row.rho = parse_optional(f[3]);
      row.param_index = std::stoi(f[4]);
      if (f[6].rfind("skipped", 0) == 0) {
        row.skip_reason = f[6];
        rows.push_back(std::move(row));
        continue;
      }
      row.true_theta = std::stod(f[5]);
      row.post_mean = parse_optional(f[6]);
      row.post_sd = parse_optional(f[7]);
      row.ref_post_mean = parse_optional(f[8]);
      row.runtime_ms = parse_optional(f[9]);
      row.acceptance_rate = parse_optional(f[10]);
      if (!row.post_mean || !row.post_sd) throw std::runtime_error("missing posterior summary");
      rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      throw std::runtime_error("report line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<SummaryRow> summarize_report(const std::vector<ReportRow>& rows) {
  // Exact-strategy sd per (replicate, n, param) for the sd metric.
  std::map<std::tuple<int, int, int>, double> exact_sd;
  for (const ReportRow& row : rows) {
    if (row.method == "exact" && row.skip_reason.empty()) {
      exact_sd[{row.replicate, row.n, row.param_index}] = *row.post_sd;
    }
  }

  struct Acc {
    double mean_err = 0.0;
    double sd_err = 0.0;
    long count = 0;
    long sd_count = 0;
    std::set<std::pair<int, int>> runs;  // (replicate, n) seen
    double runtime = 0.0;
    long runtime_count = 0;
    double acceptance = 0.0;
    bool against_exact = true;
  };
  std::vector<std::string> label_order;
  std::map<std::pair<std::string, int>, Acc> acc;
  for (const ReportRow& row : rows) {
    if (!row.skip_reason.empty()) continue;
    const std::string label = row.rho ? row.method + "(rho=" + format_double(*row.rho) + ")" : row.method;
    if (std::find(label_order.begin(), label_order.end(), label) == label_order.end()) {
      label_order.push_back(label);
    }
    Acc& a = acc[{label, row.n}];
    const double ref = row.ref_post_mean.value_or(row.true_theta);
    if (!row.ref_post_mean) a.against_exact = false;
    a.mean_err += std::abs(*row.post_mean - ref);
    ++a.count;
    const auto sd_it = exact_sd.find({row.replicate, row.n, row.param_index});
    if (sd_it != exact_sd.end()) {
      a.sd_err += std::abs(*row.post_sd - sd_it->second);
      ++a.sd_count;
    }
    if (a.runs.insert({row.replicate, row.n}).second) {
      if (row.runtime_ms) {
        a.runtime += *row.runtime_ms;
        ++a.runtime_count;
      }
      a.acceptance += row.acceptance_rate.value_or(0.0);
    }
  }

  std::vector<SummaryRow> out;
  for (const std::string& label : label_order) {
    for (const auto& [key, a] : acc) {
      if (key.first != label) continue;
      SummaryRow s;
      s.label = label;
      s.n = key.second;
      s.mean_abs_mean_error = a.mean_err / static_cast<double>(a.count);
      if (a.sd_count > 0) s.mean_abs_sd_error = a.sd_err / static_cast<double>(a.sd_count);
      if (a.runtime_count > 0) s.mean_runtime_ms = a.runtime / static_cast<double>(a.runtime_count);
      s.mean_acceptance_rate = a.acceptance / static_cast<double>(a.runs.size());
      s.reference = a.against_exact ? "exact" : "truth";
      out.push_back(std::move(s));
    }
  }
  return out;
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "method,n,mean_abs_mean_error,mean_abs_sd_error,mean_runtime_ms,mean_acceptance_rate,reference\n";
  for (const SummaryRow& s : rows) {
    out << s.label << ',' << s.n << ',' << format_double(s.mean_abs_mean_error) << ','
        << format_optional(s.mean_abs_sd_error) << ',' << format_optional(s.mean_runtime_ms) << ','
        << format_double(s.mean_acceptance_rate) << ',' << s.reference << '\n';
  }
}

void write_runtime_table(std::ostream& out, const std::vector<SummaryRow>& rows) {
  std::set<int> ns;
  std::vector<std::string> labels;
  for (const SummaryRow& s : rows) {
    ns.insert(s.n);
    if (std::find(labels.begin(), labels.end(), s.label) == labels.end()) labels.push_back(s.label);
  }
  out << "method";
  for (int n : ns) out << ",n=" << n;
  out << '\n';
  for (const std::string& label : labels) {
    out << label;
    for (int n : ns) {
      out << ',';
      for (const SummaryRow& s : rows) {
        if (s.label == label && s.n == n && s.mean_runtime_ms) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.2E", *s.mean_runtime_ms);
          out << buf;
        }
      }
    }
    out << '\n';
  }
}

void write_line_chart_svg(std::ostream& out, const std::string& title, const std::string& y_label,
                          const std::map<std::string, std::vector<std::pair<double, double>>>& series) {
  constexpr double width = 640, height = 420, left = 70, right = 170, top = 40, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  double x_min = 1e300, x_max = -1e300, y_max = 0.0;
  for (const auto& [name, pts] : series) {
    for (const auto& [x, y] : pts) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_max = std::max(y_max, y);
    }
  }
  if (x_min > x_max) x_min = 0, x_max = 1;
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max <= 0.0) y_max = 1.0;
  y_max *= 1.1;
  const auto sx = [&](double x) { return left + (x - x_min) / (x_max - x_min) * plot_w; };
  const auto sy = [&](double y) { return top + plot_h - y / y_max * plot_h; };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  char buf[128];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = y_max * i / 4.0;
    std::snprintf(buf, sizeof buf, "%.3g", y);
    out << "<text x=\"" << left - 6 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">" << buf << "</text>\n";
  }
  std::set<double> xs;
  for (const auto& [name, pts] : series) {
    for (const auto& pt : pts) xs.insert(pt.first);
  }
  for (double x : xs) {
    std::snprintf(buf, sizeof buf, "%g", x);
    out << "<text x=\"" << sx(x) << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\">" << buf
        << "</text>\n";
  }
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">n</text>\n";
  out << "<text x=\"16\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << top + plot_h / 2 << ")\">" << y_label << "</text>\n";

  int idx = 0;
  for (const auto& [name, pts] : series) {
    const char* color = palette[idx % 8];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : pts) out << sx(x) << ',' << sy(y) << ' ';
    out << "\"/>\n";
    for (const auto& [x, y] : pts) {
      out << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = top + 10 + 18 * idx;
    out << "<line x1=\"" << left + plot_w + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + plot_w + 32
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << left + plot_w + 38 << "\" y=\"" << ly + 4 << "\">" << name << "</text>\n";
    ++idx;
  }
  out << "</svg>\n";
}

void cmd_report(const ExperimentConfig& config) {
  const fs::path dir(config.out_dir);
  std::ifstream in(dir / "report.csv");
  if (!in) throw std::runtime_error("missing " + (dir / "report.csv").string() + " (run posterior first)");
  const std::vector<SummaryRow> summary = summarize_report(read_report(in));
  {
    auto out = open_output(dir / "summary.csv");
    write_summary(out, summary);
  }
  {
    auto out = open_output(dir / "runtime_table.csv");
    write_runtime_table(out, summary);
  }
  std::map<std::string, std::vector<std::pair<double, double>>> mean_series, sd_series;
  for (const SummaryRow& s : summary) {
    mean_series[s.label].emplace_back(s.n, s.mean_abs_mean_error);
    if (s.mean_abs_sd_error) sd_series[s.label].emplace_back(s.n, *s.mean_abs_sd_error);
  }
  {
    auto out = open_output(dir / "mean_error.svg");
    write_line_chart_svg(out, "Posterior mean error", "mean |mu - mu_ref|", mean_series);
  }
  auto out = open_output(dir / "sd_error.svg");
  write_line_chart_svg(out, "Posterior sd error", "mean |sd - sd_exact|", sd_series);
}

}  // namespace mrflab
