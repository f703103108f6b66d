#include <gtest/gtest.h>

#include "pride/analysis.hpp"
#include "pride/baselines.hpp"
#include "pride/data.hpp"
#include "pride/pride.hpp"
#include "pride/transform.hpp"
#include "test_util.hpp"

using pride::Partition;

namespace {

pride::DataSet small_synthetic(std::uint64_t seed, int n = 300) {
  pride::SyntheticConfig cfg;
  cfg.seed = seed;
  cfg.n = n;
  return pride::standardize_dataset(pride::generate_confounded(cfg));
}

pride::PrideConfig base_config(Eigen::Index tau, double lambda, std::uint64_t seed) {
  pride::PrideConfig c;
  c.tau_subs = tau;
  c.lambda = lambda;
  c.master_seed = seed;
  c.solver.method = pride::DualMethod::exact;
  return c;
}

bool identical(const pride::PrideResult& a, const pride::PrideResult& b) {
  if (a.per_party_alpha.size() != b.per_party_alpha.size()) return false;
  for (std::size_t k = 0; k < a.per_party_alpha.size(); ++k)
    if (!(a.per_party_alpha[k].array() == b.per_party_alpha[k].array()).all() ||
        !(a.local_weights[k].array() == b.local_weights[k].array()).all())
      return false;
  return (a.global_beta.array() == b.global_beta.array()).all();
}

}  // namespace

TEST(Partition, Contiguous) {
  const auto p = Partition::contiguous(400, 2);
  EXPECT_EQ(p.features(0).front(), 0);
  EXPECT_EQ(p.features(0).back(), 199);
  EXPECT_EQ(p.features(1).front(), 200);
  EXPECT_EQ(p.features(1).back(), 399);
  const auto s = Partition::contiguous(5, 5);
  for (int k = 0; k < 5; ++k) EXPECT_EQ(s.features(k), std::vector<Eigen::Index>{k});
  const auto u = Partition::contiguous(7, 3);
  EXPECT_EQ(u.size(0), 3);
  EXPECT_EQ(u.size(2), 2);
  EXPECT_THROW(Partition::contiguous(2, 3), std::invalid_argument);
  EXPECT_THROW(Partition::contiguous(2, 0), std::invalid_argument);
}

TEST(Partition, ExplicitSets) {
  const auto p = Partition::from_sets(3, {{0, 2}, {1}});
  EXPECT_EQ(p.num_parties(), 2);
  EXPECT_THROW(Partition::from_sets(2, {{0}, {0, 1}}), std::invalid_argument);
  EXPECT_THROW(Partition::from_sets(3, {{0}, {1}}), std::invalid_argument);
  EXPECT_THROW(Partition::from_sets(3, {{0, 1, 2}, {}}), std::invalid_argument);
  EXPECT_THROW(Partition::from_sets(3, {{0, 1, 5}}), std::invalid_argument);
  const Eigen::MatrixXd X = testutil::randn(4, 3, 1);
  EXPECT_EQ(p.block(X, 0).col(1), X.col(2));
  EXPECT_EQ(p.segment(Eigen::Vector3d(1, 2, 3), 0), Eigen::Vector2d(1, 3));
}

TEST(PartyShare, ZeroSigmaIsPlainSrht) {
  const Eigen::MatrixXd X = testutil::randn(20, 30, 2);
  const auto s = pride::party_share(0, X, 8, 0.0, 11, 12);
  const Eigen::MatrixXd plain = pride::SrhtProjection(30, 8, 11).apply(X);
  EXPECT_TRUE((s.payload.array() == plain.array()).all());
  EXPECT_EQ(s.sigma_used, 0.0);
  EXPECT_THROW(pride::party_share(0, X, 31, 0.0, 1, 2), std::invalid_argument);
}

TEST(PartyShare, TableShape) {
  const Eigen::MatrixXd X = testutil::randn(3, 2592, 3);
  const auto s = pride::party_share(1, X, 130, 1.0, 1, 2);
  EXPECT_EQ(s.payload.rows(), 3);
  EXPECT_EQ(s.payload.cols(), 130);
}

TEST(PartyShare, IndependentAcrossSeeds) {
  const Eigen::MatrixXd X = testutil::randn(500, 64, 4);
  const auto a = pride::party_share(0, X, 20, 0.0, 1, 2);
  const auto b = pride::party_share(1, testutil::randn(500, 64, 5), 20, 0.0, 3, 4);
  const Eigen::Map<const Eigen::VectorXd> va(a.payload.data(), a.payload.size()), vb(b.payload.data(), b.payload.size());
  const Eigen::VectorXd ca = va.array() - va.mean(), cb = vb.array() - vb.mean();
  EXPECT_LT(std::abs(ca.dot(cb) / (ca.norm() * cb.norm())), 0.05);
}

TEST(LocalDesign, ShapeAndOrder) {
  const Eigen::MatrixXd X = testutil::randn(6, 9, 6);
  const auto part = Partition::contiguous(9, 3);
  std::vector<pride::FeatureShare> shares;
  for (int k = 2; k >= 0; --k) shares.push_back(pride::party_share(k, part.block(X, k), 2, 0.0, 10 + k, 20 + k));
  const auto d = pride::assemble_local_design(1, part.block(X, 1), shares, 3);
  EXPECT_EQ(d.matrix.cols(), 3 + 2 * 2);
  EXPECT_EQ(d.raw_block(), part.block(X, 1));
  EXPECT_EQ(d.matrix.middleCols(3, 2), shares[2].payload);  // origin 0 first
  EXPECT_EQ(d.matrix.middleCols(5, 2), shares[0].payload);  // then origin 2
}

TEST(LocalDesign, CancerShape) {
  const Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(2, 500);
  std::vector<pride::FeatureShare> shares;
  for (int k = 0; k < 4; ++k) shares.push_back(pride::party_share(k, raw, 100, 0.0, k, k));
  EXPECT_EQ(pride::assemble_local_design(0, raw, shares, 4).matrix.cols(), 800);
}

TEST(LocalDesign, ProtocolErrors) {
  const Eigen::MatrixXd raw = testutil::randn(4, 5, 7);
  std::vector<pride::FeatureShare> shares = {pride::party_share(0, raw, 2, 0.0, 1, 1),
                                             pride::party_share(1, raw, 2, 0.0, 2, 2)};
  EXPECT_THROW(pride::assemble_local_design(0, raw, std::vector<pride::FeatureShare>{shares[0]}, 2), std::logic_error);
  auto dup = shares;
  dup.push_back(shares[1]);
  EXPECT_THROW(pride::assemble_local_design(0, raw, dup, 2), std::logic_error);
  auto bad_rows = shares;
  bad_rows[1].payload = Eigen::MatrixXd::Zero(3, 2);
  EXPECT_THROW(pride::assemble_local_design(0, raw, bad_rows, 2), std::logic_error);
}

TEST(LocalDesign, ValueSemantics) {
  const Eigen::MatrixXd raw = testutil::randn(4, 5, 8);
  std::vector<pride::FeatureShare> shares = {pride::party_share(0, raw, 2, 0.0, 1, 1),
                                             pride::party_share(1, raw, 2, 0.0, 2, 2)};
  const auto d = pride::assemble_local_design(0, raw, shares, 2);
  const Eigen::MatrixXd before = d.matrix;
  shares[1].payload.setZero();
  EXPECT_EQ(d.matrix, before);
}

TEST(RunPride, RequiresStandardized) {
  const Eigen::MatrixXd X = testutil::randn(30, 4, 9).array() + 3.0;
  EXPECT_THROW(pride::run_pride(X, testutil::randn(30, 1), Partition::contiguous(4, 2), base_config(1, 1.0, 1)),
               std::invalid_argument);
  const Eigen::MatrixXd Xs = testutil::standardized(testutil::randn(30, 4, 9));
  EXPECT_THROW(pride::run_pride(Xs, testutil::randn(30, 1), Partition::contiguous(4, 2), base_config(1, 0.0, 1)),
               std::invalid_argument);
}

TEST(RunPride, SingleParty) {
  const Eigen::MatrixXd X = testutil::standardized(testutil::randn(60, 10, 10));
  const Eigen::VectorXd y = testutil::randn(60, 11);
  auto cfg = base_config(3, 0.2, 1);
  cfg.solver.method = pride::DualMethod::sdca;
  cfg.privacy = pride::PrivacyParams::with_epsilon(1.0);
  const auto part = Partition::contiguous(10, 1);
  const auto r = pride::run_pride(X, y, part, cfg);
  const Eigen::VectorXd ridge = testutil::ridge_oracle(X, y, 0.2);
  EXPECT_LT(testutil::rel_err(r.global_beta, ridge), 1e-6);
  const Eigen::MatrixXd Xt = testutil::randn(15, 10, 12);
  const Eigen::VectorXd yt = testutil::randn(15, 13);
  EXPECT_NEAR(pride::prediction_mse_normalized(yt, pride::predict_global(r, Xt, part)),
              pride::prediction_mse_normalized(yt, Xt * ridge), 1e-6);
}

TEST(RunPride, GlobalBetaAssembly) {
  const auto d = small_synthetic(3, 200);
  const auto part = Partition::from_sets(400, [] {
    std::vector<std::vector<Eigen::Index>> s(2);
    for (Eigen::Index j = 0; j < 400; ++j) s[static_cast<std::size_t>(j % 2)].push_back(j);
    return s;
  }());
  auto cfg = base_config(20, 1.0, 4);
  cfg.privacy = pride::PrivacyParams::with_epsilon(2.0);
  const auto r = pride::run_pride(d.X, d.y, part, cfg);
  for (int k = 0; k < 2; ++k) EXPECT_EQ(r.global_beta(part.features(k)), r.per_party_beta[static_cast<std::size_t>(k)]);
  EXPECT_EQ(pride::predict_global(r, Eigen::MatrixXd::Zero(3, 400), part), Eigen::VectorXd::Zero(3));
  EXPECT_GT(r.max_sigma(), 0.0);
  EXPECT_TRUE(r.converged());
}

TEST(RunPride, DeterministicAndDualLocoIdentity) {
  const auto d = small_synthetic(5);
  const auto part = Partition::contiguous(400, 2);
  for (auto method : {pride::DualMethod::exact, pride::DualMethod::sdca}) {
    auto cfg = base_config(40, 5.0, 77);
    cfg.solver.method = method;
    cfg.privacy = pride::PrivacyParams::with_epsilon(1.0);
    EXPECT_TRUE(identical(pride::run_pride(d.X, d.y, part, cfg), pride::run_pride(d.X, d.y, part, cfg)));
    cfg.privacy = pride::PrivacyParams::none();
    const auto a = pride::run_pride(d.X, d.y, part, cfg);
    const auto b = pride::run_dual_loco(d.X, d.y, part, cfg);
    EXPECT_TRUE(identical(a, b));
    EXPECT_EQ(a.max_sigma(), 0.0);
  }
}

TEST(RunPride, SigmaPolicies) {
  const auto d = small_synthetic(6, 200);
  const auto part = Partition::contiguous(400, 2);
  std::vector<double> th;
  const auto per = pride::party_sigmas(d.X, part, pride::PrivacyParams::with_epsilon(1.0), pride::SigmaPolicy::per_party, &th);
  const auto mx = pride::party_sigmas(d.X, part, pride::PrivacyParams::with_epsilon(1.0), pride::SigmaPolicy::max_over_parties);
  for (int k = 0; k < 2; ++k) {
    EXPECT_DOUBLE_EQ(per[static_cast<std::size_t>(k)], pride::noise_sigma(1.0, 0.05, th[static_cast<std::size_t>(k)]));
    EXPECT_DOUBLE_EQ(mx[static_cast<std::size_t>(k)], std::max(per[0], per[1]));
  }
  EXPECT_EQ(pride::party_sigmas(d.X, part, pride::PrivacyParams::none(), pride::SigmaPolicy::per_party),
            std::vector<double>(2, 0.0));
}

// beta_k is a function of the raw block and the received shares only.
TEST(RunPride, RawBlockPurity) {
  const auto d = small_synthetic(7, 200);
  const auto part = Partition::contiguous(400, 2);
  auto cfg = base_config(20, 2.0, 8);
  auto shares = pride::exchange_shares(d.X, part, 20, {1.0, 1.0}, 8);
  const auto a = pride::solve_with_shares(d.X, d.y, part, shares, cfg);
  shares[0] = pride::party_share(0, part.block(d.X, 0), 20, 1.0, 999, 998);  // party 0's own share
  const auto b = pride::solve_with_shares(d.X, d.y, part, shares, cfg);
  EXPECT_EQ(a.per_party_beta[0], b.per_party_beta[0]);
  EXPECT_NE(a.per_party_beta[1], b.per_party_beta[1]);
}

TEST(RunPride, PerPartyLambda) {
  const auto d = small_synthetic(8, 200);
  const auto part = Partition::contiguous(400, 2);
  auto cfg = base_config(20, 1.0, 9);
  const auto common = pride::run_pride(d.X, d.y, part, cfg);
  cfg.party_lambda = {1.0, 50.0};
  const auto mixed = pride::run_pride(d.X, d.y, part, cfg);
  EXPECT_EQ(common.per_party_beta[0], mixed.per_party_beta[0]);
  EXPECT_LT(mixed.per_party_beta[1].norm(), common.per_party_beta[1].norm());
  EXPECT_EQ(mixed.party_lambda, (std::vector<double>{1.0, 50.0}));
  cfg.party_lambda = {1.0};
  EXPECT_THROW(pride::run_pride(d.X, d.y, part, cfg), std::invalid_argument);
}

TEST(RunPride, LocalPrediction) {
  const auto raw = [] {
    pride::SyntheticConfig c;
    c.n = 300;
    return pride::generate_confounded(c);
  }();
  const auto [tr, te] = pride::train_test_split(raw, 0.8, 1);
  const auto part = Partition::contiguous(400, 2);
  auto cfg = base_config(40, 5.0, 10);
  cfg.privacy = pride::PrivacyParams::none();
  const auto r = pride::run_pride(tr.X, tr.y, part, cfg);
  // noise-free shares: the local prediction on training rows reproduces the fit
  const Eigen::VectorXd fit = pride::predict_local(r, 0, tr.X, part, 1);
  const auto design = pride::assemble_local_design(0, part.block(tr.X, 0), pride::exchange_shares(tr.X, part, 40, {0, 0}, 10), 2);
  EXPECT_LT((fit - design.matrix * r.local_weights[0]).norm(), 1e-9 * fit.norm());
  EXPECT_EQ(pride::predict_local(r, 1, te.X, part, 5).size(), te.n());
}

TEST(RunPride, DualLocoBeatsNaiveBayesOnBlockX) {
  double dl = 0.0, nb = 0.0;
  const auto part = Partition::contiguous(400, 2);
  for (std::uint64_t s = 1; s <= 10; ++s) {
    pride::SyntheticConfig c;
    c.seed = s;
    const auto [tr, te] = pride::train_test_split(pride::generate_confounded(c), 0.8, s);
    const Eigen::VectorXd bx = tr.true_beta->head(200);
    auto cfg = base_config(40, 5.0, s);
    const auto r = pride::run_dual_loco(tr.X, tr.y, part, cfg);
    const auto b = pride::semi_naive_bayes(tr.X, tr.y, part, 5.0, pride::LossKind::squared);
    dl += (r.global_beta.head(200) - bx).squaredNorm() / bx.squaredNorm();
    nb += (b.beta.head(200) - bx).squaredNorm() / bx.squaredNorm();
  }
  EXPECT_LT(dl, nb);
}

TEST(RunPride, ErrorDecreasesWithEpsilon) {
  const std::vector<double> eps = {0.1, 0.5, 1, 2, 5, 20};
  std::vector<double> err(eps.size(), 0.0);
  const auto part = Partition::contiguous(400, 2);
  for (std::uint64_t s = 1; s <= 10; ++s) {
    pride::SyntheticConfig c;
    c.seed = s;
    const auto [tr, te] = pride::train_test_split(pride::generate_confounded(c), 0.8, s);
    for (std::size_t i = 0; i < eps.size(); ++i) {
      auto cfg = base_config(40, 5.0, s);
      cfg.privacy = pride::PrivacyParams::with_epsilon(eps[i]);
      err[i] += pride::estimation_error(pride::run_pride(tr.X, tr.y, part, cfg).global_beta, *tr.true_beta).normalized;
    }
  }
  EXPECT_LT(testutil::spearman(eps, err), 0.0);
}

TEST(KernelGap, ShrinksWithTauSubs) {
  const auto part = Partition::contiguous(400, 2);
  std::vector<double> gaps;
  for (Eigen::Index tau : {10, 20, 40}) {
    double g = 0.0;
    for (std::uint64_t s = 1; s <= 20; ++s) {
      pride::SyntheticConfig c;
      c.seed = 1;
      c.n = 200;
      const auto d = pride::standardize_dataset(pride::generate_confounded(c));
      const Eigen::MatrixXd theta = pride::local_embedding(part, 0, tau, s);
      g += pride::kernel_gap(d.X, d.X * theta, Eigen::MatrixXd(0, 0)) / 20.0;
    }
    gaps.push_back(g);
  }
  EXPECT_GT(gaps[0], gaps[1]);
  EXPECT_GT(gaps[1], gaps[2]);
}
