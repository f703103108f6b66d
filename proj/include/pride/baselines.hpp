#ifndef PRIDE_BASELINES_HPP
#define PRIDE_BASELINES_HPP

#include <Eigen/Dense>

#include <string_view>
#include <vector>

#include "pride/dual_solver.hpp"
#include "pride/pride.hpp"

namespace pride {

enum class BaselineMethod { semi_nb, single_machine, ridge_closed_form };

std::string_view to_string(BaselineMethod method);

struct BaselineResult {
  BaselineMethod method = BaselineMethod::single_machine;
  Eigen::VectorXd beta;
  std::vector<Eigen::VectorXd> blocks;  ///< per party, semi_nb only
  double lambda = 0.0;
  bool converged = true;
};

/// (X^T X + n lambda I)^{-1} X^T y. Uses the n x n dual system when p > n.
/// lambda is floored at 1e-12.
Eigen::VectorXd ridge_closed_form(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                                  double lambda);

/// Every party fits its own raw block against y with no communication.
BaselineResult semi_naive_bayes(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                                const Partition& partition, double lambda, LossKind loss,
                                const SolverOptions& options = {});
/// Same with one lambda per party.
BaselineResult semi_naive_bayes(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                                const Partition& partition, const std::vector<double>& lambdas, LossKind loss,
                                const SolverOptions& options = {});

/// The undistributed optimum beta* of the regularized objective.
BaselineResult single_machine(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                              double lambda, LossKind loss, const SolverOptions& options = {});

}  // namespace pride

#endif  // PRIDE_BASELINES_HPP
