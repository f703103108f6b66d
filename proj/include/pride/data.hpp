#ifndef PRIDE_DATA_HPP
#define PRIDE_DATA_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pride {

enum class BlockLabel { none, x_block, c_block };

/// Dense design plus response. Column statistics are empty until the set has
/// been standardized; after that they hold the training statistics used.
struct DataSet {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd column_means;
  Eigen::VectorXd column_stds;
  double response_mean = 0.0;
  std::optional<Eigen::VectorXd> true_beta;  ///< in the coordinates of X
  std::vector<BlockLabel> block_labels;
  std::vector<std::string> column_names;
  std::string response_name = "y";

  Eigen::Index n() const noexcept { return X.rows(); }
  Eigen::Index p() const noexcept { return X.cols(); }
  bool standardized() const noexcept { return column_stds.size() == X.cols() && X.cols() > 0; }
};

/// Column means and population standard deviations (divide by n).
struct Standardization {
  Eigen::VectorXd means;
  Eigen::VectorXd stds;

  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& X) const;
};

struct StandardizeResult {
  Eigen::MatrixXd X;
  Standardization stats;
};

/// Throws std::invalid_argument naming the first column whose std < 1e-12.
StandardizeResult standardize(const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Standardize `raw` with `stats`, centre the response by `response_mean`
/// and move a known true_beta onto the standardized scale (beta_j * std_j).
DataSet apply_standardization(const DataSet& raw, const Standardization& stats, double response_mean);

/// Standardize a data set with its own statistics.
DataSet standardize_dataset(const DataSet& raw, bool center_response = true);

/// Seeded row split. The training part is standardized with its own
/// statistics and the test part with the training ones. The response is
/// centred by the training mean unless `center_response` is false (labels).
std::pair<DataSet, DataSet> train_test_split(const DataSet& raw, double train_fraction, std::uint64_t seed,
                                             bool center_response = true);

struct SyntheticConfig {
  int grid_side = 20;
  int n = 1000;
  int n_confound_pairs = 20;
  int n_signal_pcs = 20;
  double target_snr = 5.0;
  double grf_length_scale = 12.0;
  std::uint64_t seed = 1;

  /// Features per block: each block lives on one grid_side x grid_side/2
  /// half of the grid, so both blocks together tile the full square grid.
  int block_features() const noexcept { return grid_side * (grid_side / 2); }
};

/// Two confounded feature blocks [X C] and a response y = [X C] beta + noise.
///
/// C and X0 are independent Gaussian random fields (squared-exponential
/// covariance over grid distance, unit marginal variance). For
/// `n_confound_pairs` random pairs (i_x, j_c), X[:, i_x] = X0[:, i_x] + C[:, j_c].
/// beta is the sum of the top `n_signal_pcs` right singular vectors of the
/// centred design and the noise is scaled so Var(signal) / Var(noise) equals
/// `target_snr`. Columns [0, block) are the X block, the rest the C block.
/// Returned unstandardized.
DataSet generate_confounded(const SyntheticConfig& config);

/// The (i_x, j_c) pairs the generator injects for `config` (block-local indices).
std::vector<std::pair<int, int>> confound_pairs(const SyntheticConfig& config);

/// Squared-exponential covariance on a rows x cols grid with unit diagonal.
Eigen::MatrixXd grid_covariance(int rows, int cols, double length_scale);

class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& path, std::size_t row, std::size_t column, const std::string& what);
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// Comma-separated, header row, '.' decimal, no quoting. Rows and columns in
/// error messages are 1-based, the header being row 1.
DataSet load_csv(const std::filesystem::path& path, const std::string& response_column);

/// Writes feature columns followed by the response column.
void write_csv(const std::filesystem::path& path, const DataSet& data);

}  // namespace pride

#endif  // PRIDE_DATA_HPP
