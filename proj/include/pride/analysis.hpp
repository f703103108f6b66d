#ifndef PRIDE_ANALYSIS_HPP
#define PRIDE_ANALYSIS_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

#include "pride/pride.hpp"

namespace pride {

struct EstimationError {
  double l2 = 0.0;          ///< ||b - b_ref||_2
  double normalized = 0.0;  ///< ||b - b_ref||^2 / ||b_ref||^2
};

/// Throws std::invalid_argument on length mismatch or a zero reference.
EstimationError estimation_error(const Eigen::Ref<const Eigen::VectorXd>& beta_hat,
                                 const Eigen::Ref<const Eigen::VectorXd>& beta_ref);

/// Pearson correlation. Throws on zero variance.
double coefficient_correlation(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

/// ||y - yhat||^2 / ||y - mean(y)||^2. Throws for constant y.
double prediction_mse_normalized(const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const Eigen::Ref<const Eigen::VectorXd>& y_hat);

/// Spearman rank correlation (average ranks for ties).
double spearman_correlation(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

/// tr(X^T X) / ||X||_2^2.
double effective_rank(const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Smallest singular value above max(n, p) * s_max * 1e-12.
double d_min(const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Number of singular values above the d_min threshold.
Eigen::Index numerical_rank(const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Largest |eigenvalue| of a symmetric operator given as a matvec, by power
/// iteration on its square. Stops when the relative change falls below `tol`.
double symmetric_operator_norm(Eigen::Index dim, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                               double tol = 1e-6, int max_iter = 10000);

/// ||X X^T - (X Theta + E)(X Theta + E)^T||_2 where `projected` = X Theta and
/// `noise` = E (same shape, or empty for E = 0).
double kernel_gap(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::MatrixXd>& projected,
                  const Eigen::Ref<const Eigen::MatrixXd>& noise);

/// Theta = diag(I on P_party, Pi_k' on P_k' ...) of shape p x (tau + tau_K),
/// column blocks ordered as in the local design and projections seeded as in
/// run_pride with `master_seed`.
Eigen::MatrixXd local_embedding(const Partition& partition, int party, Eigen::Index tau_subs, std::uint64_t master_seed);

/// ||I - V^T Theta Theta^T V||_2 with V the right singular vectors of X
/// for its non-zero singular values.
double subspace_embedding_distortion(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                     const Eigen::Ref<const Eigen::MatrixXd>& theta);

/// rho = C sqrt(r ln(2 r / xi) / tau_K).
double rho(double r, double tau_K, double C_const = 1.0, double xi = 0.05);

struct BoundInputs {
  double r = 1.0;
  double tau_K = 1.0;
  double sigma = 0.0;
  double d_min = 1.0;
  double beta_star_norm = 1.0;
  int K = 2;
  double C_const = 1.0;
  double xi = 0.05;
};

/// Projection term (i) and perturbation term (ii) of the error bound
///   sqrt(K) rho / (1 - 2 rho) ||b*|| * [1 + sigma/d_min (2 + (sigma tau_K + sigma tau_K^2) / d_min)].
/// `vacuous` is set, and the terms left at +inf, when rho >= 1/2.
struct BoundTerms {
  bool vacuous = false;
  double rho = 0.0;
  double term_i = 0.0;
  double term_ii = 0.0;
  double total = 0.0;
};

BoundTerms error_bound(const BoundInputs& in);

struct RegularizerCheck {
  double mc_mean = 0.0;
  double analytic = 0.0;
  double relative_gap() const { return analytic == 0.0 ? std::abs(mc_mean) : std::abs(mc_mean - analytic) / analytic; }
};

/// Monte-Carlo mean of ||y - (Z + [0 W]) b||^2 over `n_draws` noise draws on
/// the columns from `raw_columns` onward, against the closed form
/// ||y - Z b||^2 + sigma^2 n sum_{l >= raw_columns} b_l^2.
RegularizerCheck noise_regularizer_check(const Eigen::Ref<const Eigen::MatrixXd>& design, Eigen::Index raw_columns,
                                         const Eigen::Ref<const Eigen::VectorXd>& y,
                                         const Eigen::Ref<const Eigen::VectorXd>& b, double sigma, int n_draws,
                                         std::uint64_t seed);

}  // namespace pride

#endif  // PRIDE_ANALYSIS_HPP
