#include "pride/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "pride/rng.hpp"

namespace pride {

Eigen::MatrixXd Standardization::apply(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
  if (X.cols() != means.size()) throw std::invalid_argument("Standardization: column count mismatch");
  return ((X.rowwise() - means.transpose()).array().rowwise() / stds.transpose().array()).matrix();
}

StandardizeResult standardize(const Eigen::Ref<const Eigen::MatrixXd>& X) {
  if (X.rows() == 0) throw std::invalid_argument("standardize: no rows");
  const double n = static_cast<double>(X.rows());
  StandardizeResult r;
  r.stats.means = X.colwise().mean().transpose();
  r.stats.stds.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double sd = std::sqrt((X.col(j).array() - r.stats.means(j)).square().sum() / n);
    if (!(sd >= 1e-12)) throw std::invalid_argument("standardize: column " + std::to_string(j) + " is constant");
    r.stats.stds(j) = sd;
  }
  r.X = r.stats.apply(X);
  return r;
}

DataSet apply_standardization(const DataSet& raw, const Standardization& stats, double response_mean) {
  DataSet out = raw;
  out.X = stats.apply(raw.X);
  out.y = raw.y.array() - response_mean;
  out.response_mean = response_mean;
  out.column_means = stats.means;
  out.column_stds = stats.stds;
  if (raw.true_beta) out.true_beta = raw.true_beta->cwiseProduct(stats.stds);
  return out;
}

DataSet standardize_dataset(const DataSet& raw, bool center_response) {
  const auto st = standardize(raw.X);
  return apply_standardization(raw, st.stats, center_response ? raw.y.mean() : 0.0);
}

std::pair<DataSet, DataSet> train_test_split(const DataSet& raw, double train_fraction, std::uint64_t seed,
                                             bool center_response) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train_test_split: fraction must lie in (0, 1)");
  const Eigen::Index n = raw.n();
  const auto n_train = static_cast<Eigen::Index>(std::llround(train_fraction * static_cast<double>(n)));
  if (n_train < 1 || n_train >= n) throw std::invalid_argument("train_test_split: a side would be empty");

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Engine eng(seed);
  std::shuffle(perm.begin(), perm.end(), eng);
  std::vector<Eigen::Index> train_rows(perm.begin(), perm.begin() + n_train);
  std::vector<Eigen::Index> test_rows(perm.begin() + n_train, perm.end());
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());

  DataSet train_raw = raw;
  DataSet test_raw = raw;
  train_raw.X = raw.X(train_rows, Eigen::all);
  train_raw.y = raw.y(train_rows);
  test_raw.X = raw.X(test_rows, Eigen::all);
  test_raw.y = raw.y(test_rows);

  const auto st = standardize(train_raw.X);
  const double ymean = center_response ? train_raw.y.mean() : 0.0;
  return {apply_standardization(train_raw, st.stats, ymean), apply_standardization(test_raw, st.stats, ymean)};
}

Eigen::MatrixXd grid_covariance(int rows, int cols, double length_scale) {
  if (!(length_scale > 0.0)) throw std::invalid_argument("grid_covariance: length scale must be positive");
  if (rows < 1 || cols < 1) throw std::invalid_argument("grid_covariance: empty grid");
  const int m = rows * cols;
  Eigen::MatrixXd K(m, m);
  const double inv = 1.0 / (2.0 * length_scale * length_scale);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      const double dr = a / cols - b / cols;
      const double dc = a % cols - b % cols;
      K(a, b) = std::exp(-(dr * dr + dc * dc) * inv);
    }
  }
  return K;
}

namespace {

// Lower factor L with L L^T = K + jitter I; eigen-based square root when the
// Cholesky factorization breaks down.
Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& K) {
  const Eigen::Index m = K.rows();
  Eigen::MatrixXd jittered = K + 1e-10 * Eigen::MatrixXd::Identity(m, m);
  Eigen::LLT<Eigen::MatrixXd> llt(jittered);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jittered);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

Eigen::MatrixXd sample_field(Eigen::Index n, const Eigen::MatrixXd& factor, Engine& eng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd Z(n, factor.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < Z.cols(); ++j) Z(i, j) = normal(eng);
  return Z * factor.transpose();
}

void validate(const SyntheticConfig& c) {
  if (!(c.grf_length_scale > 0.0)) throw std::invalid_argument("synthetic: length scale must be positive");
  if (c.grid_side < 2 || c.grid_side % 2 != 0) throw std::invalid_argument("synthetic: grid_side must be even and >= 2");
  if (c.n < 2) throw std::invalid_argument("synthetic: need at least two rows");
  if (c.n_confound_pairs < 0 || c.n_confound_pairs > c.block_features())
    throw std::invalid_argument("synthetic: n_confound_pairs exceeds block size");
  if (c.n_signal_pcs < 1 || c.n_signal_pcs > std::min(2 * c.block_features(), c.n))
    throw std::invalid_argument("synthetic: n_signal_pcs out of range");
  if (!(c.target_snr > 0.0)) throw std::invalid_argument("synthetic: target_snr must be positive");
}

}  // namespace

std::vector<std::pair<int, int>> confound_pairs(const SyntheticConfig& config) {
  validate(config);
  const int m = config.block_features();
  Engine eng = make_engine(config.seed, "confound-pairs");
  std::vector<int> xs(static_cast<std::size_t>(m));
  std::vector<int> cs(static_cast<std::size_t>(m));
  std::iota(xs.begin(), xs.end(), 0);
  std::iota(cs.begin(), cs.end(), 0);
  std::shuffle(xs.begin(), xs.end(), eng);
  std::shuffle(cs.begin(), cs.end(), eng);
  std::vector<std::pair<int, int>> pairs;
  for (int k = 0; k < config.n_confound_pairs; ++k)
    pairs.emplace_back(xs[static_cast<std::size_t>(k)], cs[static_cast<std::size_t>(k)]);
  return pairs;
}

DataSet generate_confounded(const SyntheticConfig& config) {
  validate(config);
  const int m = config.block_features();
  const Eigen::Index n = config.n;
  const Eigen::MatrixXd factor =
      covariance_factor(grid_covariance(config.grid_side, config.grid_side / 2, config.grf_length_scale));

  Engine eng_c = make_engine(config.seed, "grf-c-block");
  Engine eng_x = make_engine(config.seed, "grf-x-block");
  const Eigen::MatrixXd C = sample_field(n, factor, eng_c);
  Eigen::MatrixXd X = sample_field(n, factor, eng_x);
  for (const auto& [ix, jc] : confound_pairs(config)) X.col(ix) += C.col(jc);

  DataSet d;
  d.X.resize(n, 2 * m);
  d.X << X, C;

  const Eigen::MatrixXd centred = d.X.rowwise() - d.X.colwise().mean();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centred, Eigen::ComputeThinV);
  const Eigen::VectorXd beta = svd.matrixV().leftCols(config.n_signal_pcs).rowwise().sum();

  const Eigen::VectorXd signal = d.X * beta;
  const double signal_var = (signal.array() - signal.mean()).square().mean();
  const double noise_sd = std::sqrt(signal_var / config.target_snr);
  Engine eng_y = make_engine(config.seed, "response-noise");
  std::normal_distribution<double> normal(0.0, noise_sd);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) d.y(i) = signal(i) + normal(eng_y);

  d.true_beta = beta;
  d.block_labels.assign(static_cast<std::size_t>(2 * m), BlockLabel::c_block);
  std::fill(d.block_labels.begin(), d.block_labels.begin() + m, BlockLabel::x_block);
  d.column_names.reserve(static_cast<std::size_t>(2 * m));
  for (int j = 0; j < m; ++j) d.column_names.push_back("x" + std::to_string(j));
  for (int j = 0; j < m; ++j) d.column_names.push_back("c" + std::to_string(j));
  return d;
}

CsvError::CsvError(const std::string& path, std::size_t row, std::size_t column, const std::string& what)
    : std::runtime_error(path + ": row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + what),
      row_(row),
      column_(column) {}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

DataSet load_csv(const std::filesystem::path& path, const std::string& response_column) {
  const std::string p = path.string();
  std::ifstream in(path);
  if (!in) throw CsvError(p, 0, 0, "cannot open file");

  std::string line;
  if (!std::getline(in, line)) throw CsvError(p, 1, 0, "missing header");
  std::vector<std::string> header = split_fields(line);
  for (auto& h : header) h = trim(h);
  const auto it = std::find(header.begin(), header.end(), response_column);
  if (it == header.end()) throw CsvError(p, 1, 0, "response column '" + response_column + "' not found");
  const auto response_idx = static_cast<std::size_t>(it - header.begin());

  std::vector<std::vector<double>> rows;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw CsvError(p, row_no, std::min(fields.size(), header.size()) + 1,
                     "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    std::vector<double> values(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string cell = trim(fields[c]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
        throw CsvError(p, row_no, c + 1, "non-numeric cell '" + cell + "'");
      if (!std::isfinite(v)) throw CsvError(p, row_no, c + 1, "non-finite cell '" + cell + "'");
      values[c] = v;
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw CsvError(p, 2, 0, "no data rows");

  DataSet d;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p_cols = static_cast<Eigen::Index>(header.size() - 1);
  d.X.resize(n, p_cols);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      const double v = rows[static_cast<std::size_t>(i)][c];
      if (c == response_idx) d.y(i) = v;
      else d.X(i, j++) = v;
    }
  }
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != response_idx) d.column_names.push_back(header[c]);
  d.response_name = response_column;
  d.block_labels.assign(static_cast<std::size_t>(p_cols), BlockLabel::none);
  return d;
}

void write_csv(const std::filesystem::path& path, const DataSet& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path.string());
  char buf[64];
  auto put = [&](double v) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, res.ptr - buf);
  };
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    out << (static_cast<std::size_t>(j) < data.column_names.size() ? data.column_names[static_cast<std::size_t>(j)]
                                                                    : "f" + std::to_string(j))
        << ',';
  }
  out << data.response_name << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      put(data.X(i, j));
      out << ',';
    }
    put(data.y(i));
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_csv: write failed for " + path.string());
}

}  // namespace pride
