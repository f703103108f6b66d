#ifndef PRIDE_DUAL_SOLVER_HPP
#define PRIDE_DUAL_SOLVER_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace pride {

/// Loss f_i(u) paired with its Fenchel conjugate.
///   squared:  f(u) = (y - u)^2 / 2,        f*(a) = a^2/2 + a y
///   logistic: f(u) = log(1 + exp(-y u)),   f*(a) = t ln t + (1-t) ln(1-t), t = -a y
/// Logistic responses must be +1 or -1.
enum class LossKind { squared, logistic };

LossKind parse_loss(std::string_view name);
std::string_view to_string(LossKind loss);

double loss_value(LossKind loss, double u, double y);
double loss_derivative(LossKind loss, double u, double y);

/// f*(alpha) for one coordinate. Throws std::invalid_argument when a
/// logistic argument falls outside alpha * y in [-1, 0].
double conjugate_value(LossKind loss, double alpha, double y);

enum class DualMethod {
  sdca,  ///< stochastic dual coordinate ascent (any loss)
  exact  ///< closed-form dual via thin SVD (squared loss only)
};

struct SolverOptions {
  DualMethod method = DualMethod::sdca;
  int max_epochs = 500;
  double tol = 1e-8;
  std::uint64_t seed = 0;  ///< permutation stream
  bool record_objective = false;
  std::optional<Eigen::VectorXd> warm_start;
};

/// Dual iterate plus the primal cache v = X^T alpha / (n lambda).
/// The primal coefficients on the solved design are -v.
struct DualState {
  Eigen::VectorXd alpha;
  Eigen::VectorXd primal_cache;
  double lambda = 0.0;
  LossKind loss = LossKind::squared;
  int epochs = 0;
  bool converged = false;
  double last_max_change = 0.0;
  std::vector<double> objective_trace;  ///< dual objective after each epoch, if recorded

  Eigen::VectorXd primal() const { return -primal_cache; }
};

/// Minimizes D(alpha) = sum_i f*_i(alpha_i) + 1/(2 n lambda) alpha^T X X^T alpha.
///
/// SDCA visits coordinates in a fresh seeded permutation each epoch and stops
/// once the largest coordinate change in an epoch is below `tol`. Squared loss
/// uses the exact coordinate minimizer; logistic uses a safeguarded Newton
/// iteration on t = -alpha_i y_i in (0, 1). Hitting max_epochs is reported in
/// `converged`, not thrown.
DualState sdca_solve(const Eigen::Ref<const Eigen::MatrixXd>& Xbar, const Eigen::Ref<const Eigen::VectorXd>& y,
                     double lambda, LossKind loss, const SolverOptions& options = {});

/// -(1 / (n lambda)) X_raw^T alpha.
Eigen::VectorXd primal_recover(const Eigen::Ref<const Eigen::MatrixXd>& X_raw,
                               const Eigen::Ref<const Eigen::VectorXd>& alpha, double lambda);

double dual_objective(LossKind loss, const Eigen::Ref<const Eigen::MatrixXd>& Xbar,
                      const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& alpha,
                      double lambda);
double dual_objective(const DualState& state, const Eigen::Ref<const Eigen::MatrixXd>& Xbar,
                      const Eigen::Ref<const Eigen::VectorXd>& y);

/// J(b) = (1/n) sum_i f_i(x_i^T b) + lambda/2 ||b||^2.
double primal_objective(LossKind loss, const Eigen::Ref<const Eigen::MatrixXd>& X,
                        const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& b,
                        double lambda);
Eigen::VectorXd primal_gradient(LossKind loss, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& b,
                                double lambda);

/// J(-v) + D(alpha)/n; non-negative, zero at the optimum.
double duality_gap(const DualState& state, const Eigen::Ref<const Eigen::MatrixXd>& Xbar,
                   const Eigen::Ref<const Eigen::VectorXd>& y);

/// Exact squared-loss dual solutions for many lambdas from one thin SVD:
/// alpha(lambda) = -(y - U diag(s^2 / (s^2 + n lambda)) U^T y).
class RidgeDualPath {
 public:
  RidgeDualPath(const Eigen::Ref<const Eigen::MatrixXd>& Xbar, const Eigen::Ref<const Eigen::VectorXd>& y);
  Eigen::VectorXd alpha(double lambda) const;
  Eigen::Index rows() const noexcept { return y_.size(); }

 private:
  Eigen::MatrixXd u_;
  Eigen::VectorXd sq_singular_;
  Eigen::VectorXd uty_;
  Eigen::VectorXd y_;
};

}  // namespace pride

#endif  // PRIDE_DUAL_SOLVER_HPP
