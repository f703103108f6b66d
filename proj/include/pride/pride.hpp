#ifndef PRIDE_PRIDE_HPP
#define PRIDE_PRIDE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "pride/dual_solver.hpp"
#include "pride/privacy.hpp"

namespace pride {

/// Disjoint, sorted, non-empty feature index sets P_1..P_K covering 0..p-1.
class Partition {
 public:
  /// K nearly equal runs; the first p % K parties get one extra feature.
  static Partition contiguous(Eigen::Index p, int num_parties);
  /// Validates disjointness, coverage and non-emptiness.
  static Partition from_sets(Eigen::Index p, std::vector<std::vector<Eigen::Index>> sets);

  int num_parties() const noexcept { return static_cast<int>(sets_.size()); }
  Eigen::Index num_features() const noexcept { return p_; }
  const std::vector<Eigen::Index>& features(int party) const { return sets_.at(static_cast<std::size_t>(party)); }
  Eigen::Index size(int party) const { return static_cast<Eigen::Index>(features(party).size()); }

  /// Columns of X owned by `party`.
  Eigen::MatrixXd block(const Eigen::Ref<const Eigen::MatrixXd>& X, int party) const;
  Eigen::VectorXd segment(const Eigen::Ref<const Eigen::VectorXd>& v, int party) const;

 private:
  Partition(Eigen::Index p, std::vector<std::vector<Eigen::Index>> sets) : p_(p), sets_(std::move(sets)) {}
  Eigen::Index p_ = 0;
  std::vector<std::vector<Eigen::Index>> sets_;
};

/// Perturbed random features released by one party: Z = X_k Pi_k + W_k.
struct FeatureShare {
  int origin_party = 0;
  Eigen::MatrixXd payload;
  double sigma_used = 0.0;
  std::uint64_t projection_seed = 0;
  std::uint64_t noise_seed = 0;
};

/// SRHT of the party's raw block plus N(0, sigma^2) noise. sigma == 0 gives
/// the unperturbed Dual-LOCO share.
FeatureShare party_share(int party, const Eigen::Ref<const Eigen::MatrixXd>& X_k, Eigen::Index tau_subs, double sigma,
                         std::uint64_t projection_seed, std::uint64_t noise_seed);

/// [X_k, Z_k' for k' != k in ascending origin order].
struct LocalDesign {
  int party = 0;
  Eigen::Index raw_columns = 0;
  Eigen::MatrixXd matrix;

  auto raw_block() const { return matrix.leftCols(raw_columns); }
};

/// Throws std::logic_error unless `shares` holds exactly one share from every
/// party other than `party` (num_parties in total), each with X_k's row count.
LocalDesign assemble_local_design(int party, const Eigen::Ref<const Eigen::MatrixXd>& raw,
                                  std::span<const FeatureShare> shares, int num_parties);

enum class SigmaPolicy {
  per_party,        ///< sigma_k from the party's own theta_k
  max_over_parties  ///< every party uses max_k sigma_k
};

struct PrideConfig {
  Eigen::Index tau_subs = 1;
  double lambda = 1.0;
  /// Optional per-party override of `lambda` (local tuning); empty means none.
  std::vector<double> party_lambda;
  PrivacyParams privacy;
  LossKind loss = LossKind::squared;
  SolverOptions solver;  ///< `seed` is ignored; each party derives its own
  SigmaPolicy sigma_policy = SigmaPolicy::per_party;
  std::uint64_t master_seed = 0;
};

struct PartyDiagnostics {
  double theta = 0.0;
  double sigma = 0.0;
  int epochs = 0;
  bool converged = false;
  std::uint64_t projection_seed = 0;
  std::uint64_t noise_seed = 0;
  std::uint64_t solver_seed = 0;
};

struct PrideResult {
  std::vector<Eigen::VectorXd> per_party_beta;
  std::vector<Eigen::VectorXd> per_party_alpha;
  /// Primal weights on the full local design (raw then random features).
  std::vector<Eigen::VectorXd> local_weights;
  Eigen::VectorXd global_beta;
  std::vector<PartyDiagnostics> diagnostics;
  Eigen::Index tau_subs = 0;
  double lambda = 0.0;
  std::vector<double> party_lambda;  ///< lambda each party actually used

  bool converged() const;
  double max_sigma() const;
};

/// Throws std::invalid_argument unless every column has |mean| <= 1e-6 and
/// population std within 1e-3 of one.
void require_standardized(const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Seeds of one party's sub-streams.
std::uint64_t projection_seed(std::uint64_t master, int party);
std::uint64_t noise_seed(std::uint64_t master, int party);
std::uint64_t solver_seed(std::uint64_t master, int party);

/// Per-party sigma_k for `privacy` (zeros when privacy is disabled).
std::vector<double> party_sigmas(const Eigen::Ref<const Eigen::MatrixXd>& X, const Partition& partition,
                                 const PrivacyParams& privacy, SigmaPolicy policy, std::vector<double>* thetas = nullptr);

/// Step-2/3 exchange: every party's share for the given sigmas (one per
/// party), seeded from `master_seed`. Empty for a single party.
std::vector<FeatureShare> exchange_shares(const Eigen::Ref<const Eigen::MatrixXd>& X, const Partition& partition,
                                          Eigen::Index tau_subs, const std::vector<double>& sigmas,
                                          std::uint64_t master_seed);

/// Share exchange, local dual solves and coefficient recovery for all parties.
PrideResult run_pride(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                      const Partition& partition, const PrideConfig& config);

/// The unperturbed pipeline: random features are shared without any noise
/// step. Equal to run_pride with privacy disabled.
PrideResult run_dual_loco(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                          const Partition& partition, const PrideConfig& config);

/// Runs the local solves on pre-exchanged shares (one per party, indexed by
/// origin). Exposed for protocol-level tests.
PrideResult solve_with_shares(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                              const Partition& partition, std::span<const FeatureShare> shares,
                              const PrideConfig& config);

/// Sum of partial predictors: sum_k X_test[:, P_k] beta_k.
Eigen::VectorXd predict_global(const PrideResult& result, const Eigen::Ref<const Eigen::MatrixXd>& X_test,
                               const Partition& partition);

/// Prediction of one party from its local design on new rows. The other
/// parties re-apply their projections to the new rows and add fresh noise
/// at their sigma_k, drawn from `test_noise_master`.
Eigen::VectorXd predict_local(const PrideResult& result, int party, const Eigen::Ref<const Eigen::MatrixXd>& X_test,
                              const Partition& partition, std::uint64_t test_noise_master);

}  // namespace pride

#endif  // PRIDE_PRIDE_HPP
