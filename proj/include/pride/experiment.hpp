#ifndef PRIDE_EXPERIMENT_HPP
#define PRIDE_EXPERIMENT_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pride/data.hpp"
#include "pride/dual_solver.hpp"
#include "pride/pride.hpp"

namespace pride {

/// Thrown for malformed or inconsistent experiment configs.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LambdaMode { fixed, cv_global, cv_local };

struct LambdaSpec {
  LambdaMode mode = LambdaMode::fixed;
  double value = 1.0;         ///< fixed mode
  std::vector<double> grid;   ///< cv modes; empty means the default grid
  int folds = 5;
};

struct ExperimentConfig {
  // dataset: synthetic generator or a CSV file
  bool synthetic = true;
  SyntheticConfig synthetic_config;
  std::string csv_path;
  std::string csv_response = "y";

  int parties = 2;
  std::vector<std::vector<Eigen::Index>> partition_sets;  ///< empty: contiguous

  bool tau_fractions = true;  ///< fractions of the smallest party size, else absolute
  std::vector<double> tau_subs = {0.2};

  std::vector<double> epsilons = {0.1, 0.5, 1.0, 2.0, 5.0, 20.0};
  bool no_privacy = true;  ///< add the epsilon = none PRIDE entry
  double delta = 0.05;
  SigmaPolicy sigma_policy = SigmaPolicy::per_party;

  LambdaSpec lambda;
  LossKind loss = LossKind::squared;
  DualMethod solver = DualMethod::exact;
  int max_epochs = 500;
  double tol = 1e-8;

  std::vector<std::string> methods = {"pride", "dual_loco", "semi_nb", "single_machine"};
  int n_seeds = 1;
  std::uint64_t master_seed = 1;
  double train_fraction = 0.8;
  std::string output_dir = "results";

  /// Throws ConfigError on the first inconsistency.
  void validate() const;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Canonical JSON of a config (every field spelled out).
std::string to_json(const ExperimentConfig& config);

/// One (method, epsilon, tau_subs, seed) cell. Missing metrics are empty.
struct ExperimentRow {
  std::string method;
  std::optional<double> epsilon;  ///< empty: no privacy
  double delta = 0.05;
  Eigen::Index tau_subs = 0;      ///< 0 for methods without shares
  std::vector<double> lambdas;    ///< one per party, or a single value
  int seed = 0;
  std::uint64_t run_seed = 0;
  std::string status = "ok";
  std::vector<double> sigmas;
  std::optional<double> err_true, err_true_x, err_true_c;
  std::optional<double> err_star, err_star_x, err_star_c;
  std::optional<double> corr_true, corr_star;
  std::optional<double> train_mse, test_mse;
  double wall_seconds = 0.0;
};

struct SummaryRow {
  std::string method;
  std::optional<double> epsilon;
  Eigen::Index tau_subs = 0;
  int n_ok = 0;
  int n_failed = 0;
  /// metric name -> (mean, standard error); NaN where no seed produced a value
  std::vector<std::pair<std::string, std::pair<double, double>>> stats;

  std::pair<double, double> stat(const std::string& name) const;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;  ///< cell order: seed, tau, epsilon, method
  std::vector<SummaryRow> summary;

  /// First summary row for a method, epsilon and tau_subs (nullptr if none).
  const SummaryRow* find(const std::string& method, std::optional<double> epsilon, Eigen::Index tau_subs) const;
};

/// Absolute tau_subs values for the config's partition.
std::vector<Eigen::Index> resolve_tau_subs(const ExperimentConfig& config, const Partition& partition);

/// Runs every cell on `jobs` worker threads. Results do not depend on `jobs`.
ExperimentResult run_experiment(const ExperimentConfig& config, int jobs = 1);

std::vector<SummaryRow> summarize(const std::vector<ExperimentRow>& rows);

std::string detail_csv(const ExperimentResult& result);
std::string summary_csv(const ExperimentResult& result);
std::string summary_json(const ExperimentResult& result);
std::string timings_csv(const ExperimentResult& result);

/// Creates `dir` and checks it is writable. Throws std::runtime_error.
void prepare_output_dir(const std::filesystem::path& dir);
/// detail.csv, summary.csv, summary.json, timings.csv and config.json.
void write_outputs(const ExperimentResult& result, const ExperimentConfig& config, const std::filesystem::path& dir);

}  // namespace pride

#endif  // PRIDE_EXPERIMENT_HPP
