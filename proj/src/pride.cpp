#include "pride/pride.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pride/rng.hpp"
#include "pride/transform.hpp"

namespace pride {

Partition Partition::contiguous(Eigen::Index p, int num_parties) {
  if (num_parties < 1) throw std::invalid_argument("partition: need at least one party");
  if (p < num_parties) throw std::invalid_argument("partition: fewer features than parties");
  std::vector<std::vector<Eigen::Index>> sets(static_cast<std::size_t>(num_parties));
  const Eigen::Index base = p / num_parties;
  const Eigen::Index extra = p % num_parties;
  Eigen::Index next = 0;
  for (int k = 0; k < num_parties; ++k) {
    const Eigen::Index len = base + (k < extra ? 1 : 0);
    for (Eigen::Index j = 0; j < len; ++j) sets[static_cast<std::size_t>(k)].push_back(next++);
  }
  return Partition(p, std::move(sets));
}

Partition Partition::from_sets(Eigen::Index p, std::vector<std::vector<Eigen::Index>> sets) {
  if (sets.empty()) throw std::invalid_argument("partition: need at least one party");
  std::vector<int> owner(static_cast<std::size_t>(p), -1);
  for (std::size_t k = 0; k < sets.size(); ++k) {
    auto& s = sets[k];
    if (s.empty()) throw std::invalid_argument("partition: party " + std::to_string(k) + " owns no features");
    std::sort(s.begin(), s.end());
    for (const Eigen::Index j : s) {
      if (j < 0 || j >= p) throw std::invalid_argument("partition: feature index " + std::to_string(j) + " out of range");
      if (owner[static_cast<std::size_t>(j)] != -1)
        throw std::invalid_argument("partition: feature " + std::to_string(j) + " assigned twice");
      owner[static_cast<std::size_t>(j)] = static_cast<int>(k);
    }
  }
  const auto missing = std::find(owner.begin(), owner.end(), -1);
  if (missing != owner.end())
    throw std::invalid_argument("partition: feature " + std::to_string(missing - owner.begin()) + " unassigned");
  return Partition(p, std::move(sets));
}

Eigen::MatrixXd Partition::block(const Eigen::Ref<const Eigen::MatrixXd>& X, int party) const {
  if (X.cols() != p_) throw std::invalid_argument("partition: design has wrong column count");
  return X(Eigen::all, features(party));
}

Eigen::VectorXd Partition::segment(const Eigen::Ref<const Eigen::VectorXd>& v, int party) const {
  if (v.size() != p_) throw std::invalid_argument("partition: vector has wrong length");
  return v(features(party));
}

FeatureShare party_share(int party, const Eigen::Ref<const Eigen::MatrixXd>& X_k, Eigen::Index tau_subs, double sigma,
                         std::uint64_t projection_seed, std::uint64_t noise_seed) {
  if (tau_subs > X_k.cols())
    throw std::invalid_argument("party_share: tau_subs exceeds the party's feature count");
  const SrhtProjection proj(X_k.cols(), tau_subs, projection_seed);
  FeatureShare s;
  s.origin_party = party;
  s.payload = gaussian_perturb(proj.apply(X_k), sigma, noise_seed);
  s.sigma_used = sigma;
  s.projection_seed = projection_seed;
  s.noise_seed = noise_seed;
  return s;
}

LocalDesign assemble_local_design(int party, const Eigen::Ref<const Eigen::MatrixXd>& raw,
                                  std::span<const FeatureShare> shares, int num_parties) {
  if (party < 0 || party >= num_parties) throw std::logic_error("assemble: party id out of range");
  std::vector<const FeatureShare*> by_origin(static_cast<std::size_t>(num_parties), nullptr);
  for (const auto& s : shares) {
    if (s.origin_party == party) continue;  // a party never uses its own random features
    if (s.origin_party < 0 || s.origin_party >= num_parties)
      throw std::logic_error("assemble: share from unknown party " + std::to_string(s.origin_party));
    if (by_origin[static_cast<std::size_t>(s.origin_party)] != nullptr)
      throw std::logic_error("assemble: duplicate share from party " + std::to_string(s.origin_party));
    if (s.payload.rows() != raw.rows()) throw std::logic_error("assemble: share row count differs from raw block");
    by_origin[static_cast<std::size_t>(s.origin_party)] = &s;
  }
  Eigen::Index cols = raw.cols();
  for (int k = 0; k < num_parties; ++k) {
    if (k == party) continue;
    if (by_origin[static_cast<std::size_t>(k)] == nullptr)
      throw std::logic_error("assemble: missing share from party " + std::to_string(k));
    cols += by_origin[static_cast<std::size_t>(k)]->payload.cols();
  }
  LocalDesign d;
  d.party = party;
  d.raw_columns = raw.cols();
  d.matrix.resize(raw.rows(), cols);
  d.matrix.leftCols(raw.cols()) = raw;
  Eigen::Index at = raw.cols();
  for (int k = 0; k < num_parties; ++k) {
    if (k == party) continue;
    const auto& payload = by_origin[static_cast<std::size_t>(k)]->payload;
    d.matrix.middleCols(at, payload.cols()) = payload;
    at += payload.cols();
  }
  return d;
}

bool PrideResult::converged() const {
  return std::all_of(diagnostics.begin(), diagnostics.end(), [](const auto& d) { return d.converged; });
}

double PrideResult::max_sigma() const {
  double m = 0.0;
  for (const auto& d : diagnostics) m = std::max(m, d.sigma);
  return m;
}

void require_standardized(const Eigen::Ref<const Eigen::MatrixXd>& X) {
  const double n = static_cast<double>(X.rows());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double mean = X.col(j).mean();
    const double sd = std::sqrt((X.col(j).array() - mean).square().sum() / n);
    if (std::abs(mean) > 1e-6 || sd < 1.0 - 1e-3 || sd > 1.0 + 1e-3)
      throw std::invalid_argument("run_pride: column " + std::to_string(j) + " is not standardized");
  }
}

std::uint64_t projection_seed(std::uint64_t master, int party) {
  return derive_seed(master, party_label(party, "projection"));
}
std::uint64_t noise_seed(std::uint64_t master, int party) { return derive_seed(master, party_label(party, "noise")); }
std::uint64_t solver_seed(std::uint64_t master, int party) {
  return derive_seed(master, party_label(party, "sdca-permutation"));
}

std::vector<double> party_sigmas(const Eigen::Ref<const Eigen::MatrixXd>& X, const Partition& partition,
                                 const PrivacyParams& privacy, SigmaPolicy policy, std::vector<double>* thetas) {
  const int K = partition.num_parties();
  std::vector<double> sig(static_cast<std::size_t>(K), 0.0);
  std::vector<double> th(static_cast<std::size_t>(K), 0.0);
  for (int k = 0; k < K; ++k) {
    th[static_cast<std::size_t>(k)] = column_range_bound(partition.block(X, k));
    if (privacy.enabled)
      sig[static_cast<std::size_t>(k)] =
          PrivacyBudget::calibrate(privacy.epsilon, privacy.delta, th[static_cast<std::size_t>(k)], 1.0,
                                   privacy.noise_multiplier)
              .sigma;
  }
  if (policy == SigmaPolicy::max_over_parties) {
    const double m = *std::max_element(sig.begin(), sig.end());
    std::fill(sig.begin(), sig.end(), m);
  }
  if (thetas) *thetas = th;
  return sig;
}

std::vector<FeatureShare> exchange_shares(const Eigen::Ref<const Eigen::MatrixXd>& X, const Partition& partition,
                                          Eigen::Index tau_subs, const std::vector<double>& sigmas,
                                          std::uint64_t master_seed) {
  const int K = partition.num_parties();
  if (static_cast<int>(sigmas.size()) != K) throw std::invalid_argument("exchange_shares: one sigma per party");
  std::vector<FeatureShare> shares;
  if (K == 1) return shares;
  for (int k = 0; k < K; ++k)
    shares.push_back(party_share(k, partition.block(X, k), tau_subs, sigmas[static_cast<std::size_t>(k)],
                                 projection_seed(master_seed, k), noise_seed(master_seed, k)));
  return shares;
}

PrideResult solve_with_shares(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                              const Partition& partition, std::span<const FeatureShare> shares,
                              const PrideConfig& config) {
  const int K = partition.num_parties();
  if (X.rows() != y.size()) throw std::invalid_argument("run_pride: row count != response length");
  if (!config.party_lambda.empty() && static_cast<int>(config.party_lambda.size()) != K)
    throw std::invalid_argument("run_pride: one lambda per party");
  auto lambda_of = [&](int k) {
    return config.party_lambda.empty() ? config.lambda : config.party_lambda[static_cast<std::size_t>(k)];
  };
  for (int k = 0; k < K; ++k)
    if (!(lambda_of(k) > 0.0)) throw std::invalid_argument("run_pride: lambda must be positive");

  PrideResult r;
  r.tau_subs = config.tau_subs;
  r.lambda = config.lambda;
  r.global_beta = Eigen::VectorXd::Zero(partition.num_features());
  r.diagnostics.resize(static_cast<std::size_t>(K));
  for (const auto& s : shares) {
    if (s.origin_party >= 0 && s.origin_party < K) {
      auto& d = r.diagnostics[static_cast<std::size_t>(s.origin_party)];
      d.sigma = s.sigma_used;
      d.projection_seed = s.projection_seed;
      d.noise_seed = s.noise_seed;
    }
  }

  for (int k = 0; k < K; ++k) {
    const Eigen::MatrixXd raw = partition.block(X, k);
    const LocalDesign design = assemble_local_design(k, raw, shares, K);
    SolverOptions opts = config.solver;
    opts.seed = solver_seed(config.master_seed, k);
    const double lam = lambda_of(k);
    const DualState st = sdca_solve(design.matrix, y, lam, config.loss, opts);
    r.party_lambda.push_back(lam);

    Eigen::VectorXd beta_k = primal_recover(raw, st.alpha, lam);
    r.global_beta(partition.features(k)) = beta_k;
    r.per_party_beta.push_back(std::move(beta_k));
    r.per_party_alpha.push_back(st.alpha);
    r.local_weights.push_back(st.primal());

    auto& d = r.diagnostics[static_cast<std::size_t>(k)];
    d.theta = column_range_bound(raw);
    d.epochs = st.epochs;
    d.converged = st.converged;
    d.solver_seed = opts.seed;
  }
  return r;
}

namespace {

void validate_inputs(const Eigen::Ref<const Eigen::MatrixXd>& X, const Partition& partition, const PrideConfig& config) {
  if (X.cols() != partition.num_features()) throw std::invalid_argument("run_pride: design/partition mismatch");
  if (config.tau_subs < 1) throw std::invalid_argument("run_pride: tau_subs must be positive");
  require_standardized(X);
}

}  // namespace

PrideResult run_pride(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                      const Partition& partition, const PrideConfig& config) {
  validate_inputs(X, partition, config);
  const std::vector<double> sigmas = party_sigmas(X, partition, config.privacy, config.sigma_policy);
  const auto shares = exchange_shares(X, partition, config.tau_subs, sigmas, config.master_seed);
  return solve_with_shares(X, y, partition, shares, config);
}

PrideResult run_dual_loco(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                          const Partition& partition, const PrideConfig& config) {
  validate_inputs(X, partition, config);
  const int K = partition.num_parties();
  std::vector<FeatureShare> shares;
  if (K > 1) {
    for (int k = 0; k < K; ++k) {
      const Eigen::MatrixXd raw = partition.block(X, k);
      if (config.tau_subs > raw.cols()) throw std::invalid_argument("dual_loco: tau_subs exceeds party size");
      FeatureShare s;
      s.origin_party = k;
      s.projection_seed = projection_seed(config.master_seed, k);
      s.noise_seed = noise_seed(config.master_seed, k);
      s.payload = SrhtProjection(raw.cols(), config.tau_subs, s.projection_seed).apply(raw);
      shares.push_back(std::move(s));
    }
  }
  return solve_with_shares(X, y, partition, shares, config);
}

Eigen::VectorXd predict_global(const PrideResult& result, const Eigen::Ref<const Eigen::MatrixXd>& X_test,
                               const Partition& partition) {
  if (X_test.cols() != partition.num_features() || result.global_beta.size() != partition.num_features())
    throw std::invalid_argument("predict_global: dimension mismatch");
  Eigen::VectorXd yhat = Eigen::VectorXd::Zero(X_test.rows());
  for (int k = 0; k < partition.num_parties(); ++k)
    yhat += partition.block(X_test, k) * result.per_party_beta.at(static_cast<std::size_t>(k));
  return yhat;
}

Eigen::VectorXd predict_local(const PrideResult& result, int party, const Eigen::Ref<const Eigen::MatrixXd>& X_test,
                              const Partition& partition, std::uint64_t test_noise_master) {
  const int K = partition.num_parties();
  if (X_test.cols() != partition.num_features()) throw std::invalid_argument("predict_local: dimension mismatch");
  std::vector<FeatureShare> shares;
  for (int k = 0; k < K; ++k) {
    if (k == party) continue;
    const auto& d = result.diagnostics.at(static_cast<std::size_t>(k));
    shares.push_back(party_share(k, partition.block(X_test, k), result.tau_subs, d.sigma, d.projection_seed,
                                 derive_seed(test_noise_master, party_label(k, "test-noise"))));
  }
  const LocalDesign design = assemble_local_design(party, partition.block(X_test, party), shares, K);
  return design.matrix * result.local_weights.at(static_cast<std::size_t>(party));
}

}  // namespace pride
