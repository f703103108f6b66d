#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "pride/analysis.hpp"
#include "pride/data.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

fs::path write_tmp(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / ("pride_test_" + name);
  std::ofstream(p) << content;
  return p;
}

double corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd x = a.array() - a.mean(), y = b.array() - b.mean();
  return x.dot(y) / (x.norm() * y.norm());
}

}  // namespace

TEST(Standardize, PopulationConvention) {
  Eigen::MatrixXd X(2, 1);
  X << 0, 2;
  const auto r = pride::standardize(X);
  EXPECT_DOUBLE_EQ(r.X(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(r.X(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(r.stats.stds(0), 1.0);
}

TEST(Standardize, MomentsAndIdempotence) {
  const Eigen::MatrixXd X = (testutil::randn(50, 6, 1) * 3.0).array() + 7.0;
  const auto r = pride::standardize(X);
  const double n = 50.0;
  for (Eigen::Index j = 0; j < 6; ++j) {
    EXPECT_LT(std::abs(r.X.col(j).mean()), 1e-10);
    EXPECT_LT(std::abs(std::sqrt(r.X.col(j).squaredNorm() / n) - 1.0), 1e-8);
  }
  EXPECT_LT((pride::standardize(r.X).X - r.X).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Standardize, ConstantColumnNamed) {
  Eigen::MatrixXd X = testutil::randn(5, 3, 2);
  X.col(2).setConstant(4.0);
  try {
    pride::standardize(X);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("column 2"), std::string::npos);
  }
}

TEST(Split, ThreeRows) {
  pride::DataSet d;
  d.X.resize(3, 1);
  d.X << 1, 2, 4;
  d.y = Eigen::Vector3d(1, 2, 3);
  const auto [tr, te] = pride::train_test_split(d, 2.0 / 3.0, 1);
  EXPECT_EQ(tr.n(), 2);
  EXPECT_EQ(te.n(), 1);
}

TEST(Split, IsAPartitionAndUsesTrainStats) {
  pride::DataSet d;
  d.X = testutil::randn(40, 3, 3);
  d.X.col(0) = Eigen::VectorXd::LinSpaced(40, 0, 39);  // row id
  d.y = testutil::randn(40, 4);
  const auto [tr, te] = pride::train_test_split(d, 0.75, 9);
  std::set<long> ids;
  for (Eigen::Index i = 0; i < tr.n(); ++i) ids.insert(std::lround(tr.X(i, 0) * tr.column_stds(0) + tr.column_means(0)));
  for (Eigen::Index i = 0; i < te.n(); ++i) ids.insert(std::lround(te.X(i, 0) * te.column_stds(0) + te.column_means(0)));
  EXPECT_EQ(ids.size(), 40u);
  EXPECT_EQ(tr.n() + te.n(), 40);
  EXPECT_EQ(tr.column_means, te.column_means);
  EXPECT_EQ(tr.response_mean, te.response_mean);
  EXPECT_LT(std::abs(tr.y.mean()), 1e-12);
  // deterministic
  const auto [tr2, te2] = pride::train_test_split(d, 0.75, 9);
  EXPECT_TRUE((tr.X.array() == tr2.X.array()).all());
  EXPECT_THROW(pride::train_test_split(d, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(pride::train_test_split(d, 0.0, 1), std::invalid_argument);
}

TEST(Synthetic, DefaultShapeAndSplit) {
  const pride::SyntheticConfig cfg;
  const auto d = pride::generate_confounded(cfg);
  EXPECT_EQ(d.n(), 1000);
  EXPECT_EQ(d.p(), 400);
  ASSERT_TRUE(d.true_beta);
  EXPECT_EQ(std::count(d.block_labels.begin(), d.block_labels.end(), pride::BlockLabel::x_block), 200);
  EXPECT_EQ(std::count(d.block_labels.begin(), d.block_labels.end(), pride::BlockLabel::c_block), 200);
  const auto [tr, te] = pride::train_test_split(d, 0.8, 1);
  EXPECT_EQ(tr.n(), 800);
  EXPECT_EQ(te.n(), 200);
}

TEST(Synthetic, Deterministic) {
  pride::SyntheticConfig cfg;
  cfg.n = 100;
  const auto a = pride::generate_confounded(cfg), b = pride::generate_confounded(cfg);
  EXPECT_TRUE((a.X.array() == b.X.array()).all());
  EXPECT_TRUE((a.y.array() == b.y.array()).all());
  cfg.seed = 2;
  EXPECT_FALSE((pride::generate_confounded(cfg).X.array() == a.X.array()).all());
}

TEST(Synthetic, InvalidConfig) {
  pride::SyntheticConfig cfg;
  cfg.grf_length_scale = 0.0;
  EXPECT_THROW(pride::generate_confounded(cfg), std::invalid_argument);
  cfg = {};
  cfg.n_confound_pairs = 1000;
  EXPECT_THROW(pride::generate_confounded(cfg), std::invalid_argument);
  cfg = {};
  cfg.n_signal_pcs = 1000;
  EXPECT_THROW(pride::generate_confounded(cfg), std::invalid_argument);
}

TEST(Synthetic, GridCovariance) {
  const Eigen::MatrixXd S = pride::grid_covariance(4, 3, 2.0);
  EXPECT_EQ(S.rows(), 12);
  EXPECT_LT((S.diagonal().array() - 1.0).abs().maxCoeff(), 1e-15);
  EXPECT_LT((S - S.transpose()).norm(), 1e-15);
  // neighbours one step apart
  EXPECT_NEAR(S(0, 1), std::exp(-1.0 / 8.0), 1e-15);
  EXPECT_THROW(pride::grid_covariance(2, 2, -1.0), std::invalid_argument);
}

// Injected pairs are more correlated than unpaired cross-block columns.
TEST(Synthetic, ConfoundingVisible) {
  double paired = 0.0, unpaired = 0.0;
  int np = 0, nu = 0;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    pride::SyntheticConfig cfg;
    cfg.seed = s;
    cfg.n = 400;
    const auto d = pride::generate_confounded(cfg);
    const int m = cfg.block_features();
    std::set<std::pair<int, int>> pairs;
    for (const auto& pr : pride::confound_pairs(cfg)) {
      pairs.insert(pr);
      paired += corr(d.X.col(pr.first), d.X.col(m + pr.second));
      ++np;
    }
    for (int i = 0; i < m; i += 7)
      for (int j = 0; j < m; j += 11)
        if (!pairs.count({i, j})) unpaired += corr(d.X.col(i), d.X.col(m + j)), ++nu;
  }
  EXPECT_GT(paired / np, unpaired / nu);
  EXPECT_GT(paired / np, 0.3);
}

TEST(Synthetic, SnrAndEffectiveRank) {
  double snr = 0.0, reff = 0.0;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    pride::SyntheticConfig cfg;
    cfg.seed = s;
    const auto d = pride::generate_confounded(cfg);
    const Eigen::VectorXd signal = d.X * *d.true_beta;
    const Eigen::VectorXd noise = d.y - signal;
    auto var = [](const Eigen::VectorXd& v) { return (v.array() - v.mean()).square().mean(); };
    snr += var(signal) / var(noise) / 10.0;
    reff += pride::effective_rank(pride::standardize(d.X).X) / 10.0;
  }
  EXPECT_GE(snr, 4.5);
  EXPECT_LE(snr, 5.5);
  EXPECT_GE(reff, 1.3);
  EXPECT_LE(reff, 4.0);
}

TEST(Csv, RoundTrip) {
  pride::DataSet d;
  d.X = testutil::randn(4, 2, 5);
  d.y = testutil::randn(4, 6);
  d.column_names = {"a", "b"};
  d.response_name = "resp";
  const fs::path p = fs::temp_directory_path() / "pride_test_roundtrip.csv";
  pride::write_csv(p, d);
  const auto r = pride::load_csv(p, "resp");
  EXPECT_TRUE((r.X.array() == d.X.array()).all());
  EXPECT_TRUE((r.y.array() == d.y.array()).all());
  EXPECT_EQ(r.column_names, d.column_names);
}

TEST(Csv, ResponseAnywhere) {
  const auto p = write_tmp("mid.csv", "a,y,b\n1,2,3\n4,5,6\n");
  const auto d = pride::load_csv(p, "y");
  EXPECT_EQ(d.p(), 2);
  EXPECT_EQ(d.y(1), 5.0);
  EXPECT_EQ(d.X(1, 1), 6.0);
}

TEST(Csv, Errors) {
  auto expect_at = [](const std::string& body, std::size_t row, std::size_t col) {
    const auto p = write_tmp("bad.csv", body);
    try {
      pride::load_csv(p, "y");
      ADD_FAILURE() << body;
    } catch (const pride::CsvError& e) {
      EXPECT_EQ(e.row(), row) << body;
      EXPECT_EQ(e.column(), col) << body;
    }
  };
  expect_at("a,y\n1,2\n3\n", 3, 2);        // ragged
  expect_at("a,y\n1,2\n3,x\n", 3, 2);      // non-numeric
  expect_at("a,y\n1,nan\n", 2, 2);         // NaN rejected
  expect_at("a,b\n1,2\n", 1, 0);           // no response column
  EXPECT_THROW(pride::load_csv("/nonexistent/file.csv", "y"), std::runtime_error);
}
