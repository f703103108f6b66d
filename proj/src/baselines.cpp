#include "pride/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pride {

std::string_view to_string(BaselineMethod method) {
  switch (method) {
    case BaselineMethod::semi_nb: return "semi_nb";
    case BaselineMethod::single_machine: return "single_machine";
    case BaselineMethod::ridge_closed_form: return "ridge_closed_form";
  }
  return "unknown";
}

Eigen::VectorXd ridge_closed_form(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                                  double lambda) {
  if (X.rows() != y.size()) throw std::invalid_argument("ridge_closed_form: row count != response length");
  if (!X.allFinite() || !y.allFinite() || !std::isfinite(lambda))
    throw std::invalid_argument("ridge_closed_form: non-finite input");
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  const double nl = static_cast<double>(n) * std::max(lambda, 1e-12);
  if (p <= n) {
    Eigen::MatrixXd A = X.transpose() * X;
    A.diagonal().array() += nl;
    return A.ldlt().solve(X.transpose() * y);
  }
  Eigen::MatrixXd G = X * X.transpose();
  G.diagonal().array() += nl;
  return X.transpose() * G.ldlt().solve(y);
}

BaselineResult semi_naive_bayes(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                                const Partition& partition, double lambda, LossKind loss,
                                const SolverOptions& options) {
  return semi_naive_bayes(X, y, partition, std::vector<double>(static_cast<std::size_t>(partition.num_parties()), lambda),
                          loss, options);
}

BaselineResult semi_naive_bayes(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                                const Partition& partition, const std::vector<double>& lambdas, LossKind loss,
                                const SolverOptions& options) {
  if (static_cast<int>(lambdas.size()) != partition.num_parties())
    throw std::invalid_argument("semi_naive_bayes: one lambda per party");
  BaselineResult r;
  r.method = BaselineMethod::semi_nb;
  r.lambda = lambdas.front();
  r.beta = Eigen::VectorXd::Zero(partition.num_features());
  for (int k = 0; k < partition.num_parties(); ++k) {
    const double lambda = lambdas[static_cast<std::size_t>(k)];
    const Eigen::MatrixXd raw = partition.block(X, k);
    const DualState st = sdca_solve(raw, y, lambda, loss, options);
    Eigen::VectorXd b = primal_recover(raw, st.alpha, lambda);
    r.beta(partition.features(k)) = b;
    r.blocks.push_back(std::move(b));
    r.converged = r.converged && st.converged;
  }
  return r;
}

BaselineResult single_machine(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                              double lambda, LossKind loss, const SolverOptions& options) {
  BaselineResult r;
  r.method = BaselineMethod::single_machine;
  r.lambda = lambda;
  const DualState st = sdca_solve(X, y, lambda, loss, options);
  r.beta = primal_recover(X, st.alpha, lambda);
  r.converged = st.converged;
  return r;
}

}  // namespace pride
