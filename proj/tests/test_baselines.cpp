#include <gtest/gtest.h>

#include "pride/baselines.hpp"
#include "pride/data.hpp"
#include "test_util.hpp"

using pride::LossKind;

TEST(Ridge, IdentityDesign) {
  const Eigen::VectorXd y = testutil::randn(6, 1);
  EXPECT_LT((pride::ridge_closed_form(Eigen::MatrixXd::Identity(6, 6), y, 0.0) - y).norm(), 1e-9);
}

TEST(Ridge, ExactFit) {
  Eigen::MatrixXd X(3, 1);
  X << 1, 2, 3;
  const Eigen::VectorXd b = pride::ridge_closed_form(X, Eigen::Vector3d(1, 2, 3), 0.0);
  EXPECT_NEAR(b(0), 1.0, 1e-10);
}

TEST(Ridge, OptimalityCondition) {
  for (auto [n, p] : {std::pair{30, 10}, std::pair{10, 30}}) {
    const Eigen::MatrixXd X = testutil::randn(n, p, 2);
    const Eigen::VectorXd y = testutil::randn(n, 3);
    const double lambda = 0.1;
    const Eigen::VectorXd b = pride::ridge_closed_form(X, y, lambda);
    EXPECT_LT((X.transpose() * X * b + n * lambda * b - X.transpose() * y).norm(), 1e-8);
  }
}

TEST(Ridge, RejectsNonFinite) {
  Eigen::MatrixXd X = testutil::randn(4, 2, 4);
  X(1, 1) = INFINITY;
  EXPECT_THROW(pride::ridge_closed_form(X, testutil::randn(4, 5), 1.0), std::invalid_argument);
}

TEST(SingleMachine, MatchesRidge) {
  const Eigen::MatrixXd X = testutil::randn(80, 30, 6);
  const Eigen::VectorXd y = testutil::randn(80, 7);
  const auto r = pride::single_machine(X, y, 0.05, LossKind::squared);
  EXPECT_LT(testutil::rel_err(r.beta, pride::ridge_closed_form(X, y, 0.05)), 1e-6);
  EXPECT_EQ(pride::to_string(r.method), "single_machine");
}

TEST(SingleMachine, ShrinkageLimit) {
  const Eigen::MatrixXd X = testutil::standardized(testutil::randn(50, 5, 8));
  const Eigen::VectorXd y = testutil::randn(50, 9);
  EXPECT_LT(pride::single_machine(X, y, 1e6, LossKind::squared).beta.norm(), 1e-3);
}

TEST(SingleMachine, DuplicatedRows) {
  const Eigen::MatrixXd X = testutil::randn(20, 5, 10);
  const Eigen::VectorXd y = testutil::randn(20, 11);
  Eigen::MatrixXd X2(40, 5);
  X2 << X, X;
  Eigen::VectorXd y2(40);
  y2 << y, y;
  const auto a = pride::single_machine(X, y, 0.1, LossKind::squared);
  const auto b = pride::single_machine(X2, y2, 0.1, LossKind::squared);
  EXPECT_LT((a.beta - b.beta).norm(), 1e-6);
}

TEST(SemiNaiveBayes, SinglePartyEqualsSingleMachine) {
  const Eigen::MatrixXd X = testutil::randn(40, 8, 12);
  const Eigen::VectorXd y = testutil::randn(40, 13);
  const auto nb = pride::semi_naive_bayes(X, y, pride::Partition::contiguous(8, 1), 0.3, LossKind::squared);
  const auto sm = pride::single_machine(X, y, 0.3, LossKind::squared);
  EXPECT_LT((nb.beta - sm.beta).norm(), 1e-9);
}

TEST(SemiNaiveBayes, OrthogonalDesignSeparates) {
  // Columns orthogonal across blocks: the objective separates.
  const Eigen::MatrixXd Q = testutil::randn(60, 6, 14).householderQr().householderQ() * Eigen::MatrixXd::Identity(60, 6);
  const Eigen::MatrixXd X = Q * std::sqrt(60.0);
  const Eigen::VectorXd y = testutil::randn(60, 15);
  const auto part = pride::Partition::contiguous(6, 3);
  const auto nb = pride::semi_naive_bayes(X, y, part, 0.1, LossKind::squared);
  const auto sm = pride::single_machine(X, y, 0.1, LossKind::squared);
  EXPECT_LT((nb.beta - sm.beta).norm(), 1e-3);
  EXPECT_EQ(nb.blocks.size(), 3u);
  EXPECT_EQ(nb.blocks[1], nb.beta.segment(2, 2));
}

TEST(SemiNaiveBayes, PerPartyLambda) {
  const Eigen::MatrixXd X = testutil::randn(40, 6, 16);
  const Eigen::VectorXd y = testutil::randn(40, 17);
  const auto part = pride::Partition::contiguous(6, 2);
  const auto a = pride::semi_naive_bayes(X, y, part, std::vector<double>{0.1, 10.0}, LossKind::squared);
  EXPECT_LT((a.blocks[0] - pride::ridge_closed_form(part.block(X, 0), y, 0.1)).norm(), 1e-6);
  EXPECT_LT((a.blocks[1] - pride::ridge_closed_form(part.block(X, 1), y, 10.0)).norm(), 1e-6);
  EXPECT_THROW(pride::semi_naive_bayes(X, y, part, std::vector<double>{0.1}, LossKind::squared), std::invalid_argument);
}

TEST(SemiNaiveBayes, ConfoundingGap) {
  double nb = 0.0, sm = 0.0;
  const auto part = pride::Partition::contiguous(400, 2);
  for (std::uint64_t s = 1; s <= 10; ++s) {
    pride::SyntheticConfig c;
    c.seed = s;
    const auto [tr, te] = pride::train_test_split(pride::generate_confounded(c), 0.8, s);
    const Eigen::VectorXd bx = tr.true_beta->head(200);
    nb += (pride::semi_naive_bayes(tr.X, tr.y, part, 5.0, LossKind::squared).beta.head(200) - bx).squaredNorm() / bx.squaredNorm();
    sm += (pride::ridge_closed_form(tr.X, tr.y, 5.0).head(200) - bx).squaredNorm() / bx.squaredNorm();
  }
  EXPECT_GE(nb / sm, 1.5);
}
