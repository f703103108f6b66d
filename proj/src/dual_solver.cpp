#include "pride/dual_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "pride/rng.hpp"

namespace pride {

namespace {

constexpr double kLogisticEdge = 1e-12;

void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& M, const char* what) {
  if (!M.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

void require_labels(const Eigen::Ref<const Eigen::VectorXd>& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y(i) != 1.0 && y(i) != -1.0) throw std::invalid_argument("logistic loss needs labels in {-1, +1}");
}

double xlogx(double t) { return t > 0.0 ? t * std::log(t) : 0.0; }

// argmin_t  t ln t + (1-t) ln(1-t) - b t + q t^2 / 2  over (0, 1).
// The derivative ln(t/(1-t)) - b + q t is increasing, so one root exists.
double logistic_coordinate(double t0, double b, double q) {
  double lo = kLogisticEdge;
  double hi = 1.0 - kLogisticEdge;
  double t = std::clamp(t0, lo, hi);
  for (int it = 0; it < 20; ++it) {
    const double g = std::log(t / (1.0 - t)) - b + q * t;
    if (g > 0.0) hi = t; else lo = t;
    if (std::abs(g) < 1e-13) break;
    const double h = 1.0 / (t * (1.0 - t)) + q;
    double next = t - g / h;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    t = next;
  }
  return t;
}

}  // namespace

LossKind parse_loss(std::string_view name) {
  if (name == "squared") return LossKind::squared;
  if (name == "logistic") return LossKind::logistic;
  throw std::invalid_argument("unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(LossKind loss) { return loss == LossKind::squared ? "squared" : "logistic"; }

double loss_value(LossKind loss, double u, double y) {
  if (loss == LossKind::squared) return 0.5 * (y - u) * (y - u);
  const double z = -y * u;
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double loss_derivative(LossKind loss, double u, double y) {
  if (loss == LossKind::squared) return u - y;
  const double z = -y * u;
  const double s = z > 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return -y * s;
}

double conjugate_value(LossKind loss, double alpha, double y) {
  if (loss == LossKind::squared) return 0.5 * alpha * alpha + alpha * y;
  const double t = -alpha * y;
  if (t < -1e-15 || t > 1.0 + 1e-15)
    throw std::invalid_argument("conjugate_value: logistic argument outside alpha*y in [-1, 0]");
  const double tc = std::clamp(t, 0.0, 1.0);
  return xlogx(tc) + xlogx(1.0 - tc);
}

double dual_objective(LossKind loss, const Eigen::Ref<const Eigen::MatrixXd>& Xbar,
                      const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& alpha,
                      double lambda) {
  const double n = static_cast<double>(y.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) sum += conjugate_value(loss, alpha(i), y(i));
  return sum + (Xbar.transpose() * alpha).squaredNorm() / (2.0 * n * lambda);
}

double dual_objective(const DualState& state, const Eigen::Ref<const Eigen::MatrixXd>& Xbar,
                      const Eigen::Ref<const Eigen::VectorXd>& y) {
  return dual_objective(state.loss, Xbar, y, state.alpha, state.lambda);
}

double primal_objective(LossKind loss, const Eigen::Ref<const Eigen::MatrixXd>& X,
                        const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& b,
                        double lambda) {
  const Eigen::VectorXd u = X * b;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) sum += loss_value(loss, u(i), y(i));
  return sum / static_cast<double>(y.size()) + 0.5 * lambda * b.squaredNorm();
}

Eigen::VectorXd primal_gradient(LossKind loss, const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& b,
                                double lambda) {
  const Eigen::VectorXd u = X * b;
  Eigen::VectorXd d(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) d(i) = loss_derivative(loss, u(i), y(i));
  return X.transpose() * d / static_cast<double>(y.size()) + lambda * b;
}

double duality_gap(const DualState& state, const Eigen::Ref<const Eigen::MatrixXd>& Xbar,
                   const Eigen::Ref<const Eigen::VectorXd>& y) {
  const double n = static_cast<double>(y.size());
  return primal_objective(state.loss, Xbar, y, state.primal(), state.lambda) + dual_objective(state, Xbar, y) / n;
}

Eigen::VectorXd primal_recover(const Eigen::Ref<const Eigen::MatrixXd>& X_raw,
                               const Eigen::Ref<const Eigen::VectorXd>& alpha, double lambda) {
  if (X_raw.rows() != alpha.size()) throw std::invalid_argument("primal_recover: row count != alpha length");
  if (!(lambda > 0.0)) throw std::invalid_argument("primal_recover: lambda must be positive");
  return -(X_raw.transpose() * alpha) / (static_cast<double>(alpha.size()) * lambda);
}

RidgeDualPath::RidgeDualPath(const Eigen::Ref<const Eigen::MatrixXd>& Xbar, const Eigen::Ref<const Eigen::VectorXd>& y)
    : y_(y) {
  if (Xbar.rows() != y.size()) throw std::invalid_argument("RidgeDualPath: row count != response length");
  require_finite(Xbar, "RidgeDualPath");
  require_finite(y, "RidgeDualPath");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Xbar, Eigen::ComputeThinU);
  u_ = svd.matrixU();
  sq_singular_ = svd.singularValues().array().square();
  uty_ = u_.transpose() * y_;
}

Eigen::VectorXd RidgeDualPath::alpha(double lambda) const {
  if (!(lambda > 0.0)) throw std::invalid_argument("RidgeDualPath: lambda must be positive");
  const double nl = static_cast<double>(y_.size()) * lambda;
  const Eigen::VectorXd shrink = (sq_singular_.array() / (sq_singular_.array() + nl)).matrix();
  return -(y_ - u_ * shrink.cwiseProduct(uty_));
}

DualState sdca_solve(const Eigen::Ref<const Eigen::MatrixXd>& Xbar, const Eigen::Ref<const Eigen::VectorXd>& y,
                     double lambda, LossKind loss, const SolverOptions& options) {
  const Eigen::Index n = Xbar.rows();
  if (n < 1) throw std::invalid_argument("sdca_solve: empty design");
  if (y.size() != n) throw std::invalid_argument("sdca_solve: row count != response length");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("sdca_solve: lambda must be positive");
  require_finite(Xbar, "sdca_solve");
  require_finite(y, "sdca_solve");
  if (loss == LossKind::logistic) require_labels(y);

  const double nl = static_cast<double>(n) * lambda;
  DualState st;
  st.lambda = lambda;
  st.loss = loss;

  if (options.method == DualMethod::exact) {
    if (loss != LossKind::squared) throw std::invalid_argument("sdca_solve: exact method needs squared loss");
    st.alpha = RidgeDualPath(Xbar, y).alpha(lambda);
    st.primal_cache = Xbar.transpose() * st.alpha / nl;
    st.converged = true;
    if (options.record_objective) st.objective_trace.push_back(dual_objective(st, Xbar, y));
    return st;
  }

  // Row access dominates, so work on the transpose (columns contiguous).
  const Eigen::MatrixXd Xt = Xbar.transpose();
  const Eigen::VectorXd sq_norms = Xt.colwise().squaredNorm().transpose();

  if (options.warm_start) {
    if (options.warm_start->size() != n) throw std::invalid_argument("sdca_solve: warm start has wrong length");
    st.alpha = *options.warm_start;
    if (loss == LossKind::logistic) {
      for (Eigen::Index i = 0; i < n; ++i)
        st.alpha(i) = -y(i) * std::clamp(-st.alpha(i) * y(i), kLogisticEdge, 1.0 - kLogisticEdge);
    }
  } else if (loss == LossKind::logistic) {
    // Interior start: t = 1/2 for every coordinate.
    st.alpha = -0.5 * y;
  } else {
    st.alpha = Eigen::VectorXd::Zero(n);
  }
  st.primal_cache = Xt * st.alpha / nl;

  auto objective = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += conjugate_value(loss, st.alpha(i), y(i));
    return s + 0.5 * nl * st.primal_cache.squaredNorm();
  };

  Engine eng(options.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), eng);
    double max_change = 0.0;
    for (const Eigen::Index i : order) {
      const auto xi = Xt.col(i);
      const double q = sq_norms(i) / nl;
      const double old = st.alpha(i);
      const double c = xi.dot(st.primal_cache) - q * old;
      double next;
      if (loss == LossKind::squared) {
        next = -(y(i) + c) / (1.0 + q);
      } else {
        const double t = logistic_coordinate(-old * y(i), c * y(i), q);
        next = -y(i) * t;
      }
      const double delta = next - old;
      if (delta != 0.0) {
        st.alpha(i) = next;
        st.primal_cache.noalias() += (delta / nl) * xi;
      }
      max_change = std::max(max_change, std::abs(delta));
    }
    st.epochs = epoch + 1;
    st.last_max_change = max_change;
    if (options.record_objective) st.objective_trace.push_back(objective());
    if (max_change < options.tol) {
      st.converged = true;
      break;
    }
  }
  // Drop accumulated drift in the incremental cache.
  st.primal_cache = Xt * st.alpha / nl;
  return st;
}

}  // namespace pride
