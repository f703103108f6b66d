#ifndef PRIDE_CV_HPP
#define PRIDE_CV_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "pride/dual_solver.hpp"
#include "pride/pride.hpp"
#include "pride/privacy.hpp"

namespace pride {

/// Validation loss per (lambda, fold) and the selected lambda.
/// Squared loss is scored by mean squared error, logistic by mean log-loss.
struct CvTable {
  std::vector<double> lambdas;
  std::vector<std::vector<double>> fold_loss;  ///< [lambda][fold]
  std::vector<double> mean_loss;
  std::size_t selected_index = 0;
  double selected_lambda = 0.0;
};

struct CvOptions {
  int folds = 5;
  LossKind loss = LossKind::squared;
  SolverOptions solver;
  std::uint64_t seed = 0;
};

/// 30 log-spaced points over [1e-4, 1e3].
std::vector<double> default_lambda_grid();
std::vector<double> log_grid(double lo, double hi, int points);

/// Balanced fold labels in [0, folds) from a seeded permutation.
std::vector<int> fold_assignment(Eigen::Index n, int folds, std::uint64_t seed);

/// Lambda tuned on the summed partial predictors. Per fold the parties
/// release one set of shares of their training rows (sigma_k from the
/// fold's training theta_k) and reuse it across the whole grid.
CvTable global_cv(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                  const Partition& partition, Eigen::Index tau_subs, const PrivacyParams& privacy,
                  const std::vector<double>& lambda_grid, const CvOptions& options,
                  SigmaPolicy policy = SigmaPolicy::per_party);

/// Lambda tuned by one party on its own local design, scoring the local
/// predictor X_bar w on held-out rows. Nothing leaves the party.
CvTable local_cv(const LocalDesign& design, const Eigen::Ref<const Eigen::VectorXd>& y,
                 const std::vector<double>& lambda_grid, const CvOptions& options);

/// Undistributed reference curve on the full design.
CvTable single_machine_cv(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                          const std::vector<double>& lambda_grid, const CvOptions& options);

}  // namespace pride

#endif  // PRIDE_CV_HPP
