#include "pride/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "pride/rng.hpp"
#include "pride/transform.hpp"

namespace pride {

EstimationError estimation_error(const Eigen::Ref<const Eigen::VectorXd>& beta_hat,
                                 const Eigen::Ref<const Eigen::VectorXd>& beta_ref) {
  if (beta_hat.size() != beta_ref.size()) throw std::invalid_argument("estimation_error: length mismatch");
  const double ref = beta_ref.squaredNorm();
  if (ref == 0.0) throw std::invalid_argument("estimation_error: reference has zero norm");
  const double diff = (beta_hat - beta_ref).squaredNorm();
  return {std::sqrt(diff), diff / ref};
}

double coefficient_correlation(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("coefficient_correlation: bad lengths");
  const Eigen::ArrayXd ca = a.array() - a.mean();
  const Eigen::ArrayXd cb = b.array() - b.mean();
  const double va = ca.square().sum();
  const double vb = cb.square().sum();
  if (va == 0.0 || vb == 0.0) throw std::invalid_argument("coefficient_correlation: zero variance");
  return std::clamp((ca * cb).sum() / std::sqrt(va * vb), -1.0, 1.0);
}

double prediction_mse_normalized(const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const Eigen::Ref<const Eigen::VectorXd>& y_hat) {
  if (y.size() != y_hat.size() || y.size() == 0) throw std::invalid_argument("prediction_mse: bad lengths");
  const double denom = (y.array() - y.mean()).square().sum();
  if (denom == 0.0) throw std::invalid_argument("prediction_mse: constant response");
  return (y - y_hat).squaredNorm() / denom;
}

namespace {

Eigen::VectorXd ranks(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const Eigen::Index n = v.size();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
  Eigen::VectorXd r(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && v(idx[static_cast<std::size_t>(j + 1)]) == v(idx[static_cast<std::size_t>(i)])) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) r(idx[static_cast<std::size_t>(k)]) = avg;
    i = j + 1;
  }
  return r;
}

Eigen::VectorXd singular_values(const Eigen::Ref<const Eigen::MatrixXd>& X) {
  return Eigen::BDCSVD<Eigen::MatrixXd>(X).singularValues();
}

double rank_threshold(const Eigen::Ref<const Eigen::MatrixXd>& X, double s_max) {
  return static_cast<double>(std::max(X.rows(), X.cols())) * s_max * 1e-12;
}

}  // namespace

double spearman_correlation(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  return coefficient_correlation(ranks(a), ranks(b));
}

double effective_rank(const Eigen::Ref<const Eigen::MatrixXd>& X) {
  const Eigen::VectorXd s = singular_values(X);
  if (s.size() == 0 || s(0) == 0.0) throw std::invalid_argument("effective_rank: zero matrix");
  return X.squaredNorm() / (s(0) * s(0));
}

double d_min(const Eigen::Ref<const Eigen::MatrixXd>& X) {
  const Eigen::VectorXd s = singular_values(X);
  if (s.size() == 0 || s(0) == 0.0) throw std::invalid_argument("d_min: zero matrix");
  const double thr = rank_threshold(X, s(0));
  double m = s(0);
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > thr) m = std::min(m, s(i));
  return m;
}

Eigen::Index numerical_rank(const Eigen::Ref<const Eigen::MatrixXd>& X) {
  const Eigen::VectorXd s = singular_values(X);
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double thr = rank_threshold(X, s(0));
  return (s.array() > thr).count();
}

double symmetric_operator_norm(Eigen::Index dim, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                               double tol, int max_iter) {
  Engine eng(0x5eedULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = normal(eng);
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = apply(apply(v));
    const double nrm = w.norm();
    if (nrm == 0.0) return 0.0;
    const double next = std::sqrt(nrm);
    v = w / nrm;
    if (it > 0 && std::abs(next - estimate) <= tol * next) return next;
    estimate = next;
  }
  return estimate;
}

double kernel_gap(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::MatrixXd>& projected,
                  const Eigen::Ref<const Eigen::MatrixXd>& noise) {
  if (projected.rows() != X.rows()) throw std::invalid_argument("kernel_gap: row count mismatch");
  Eigen::MatrixXd Z = projected;
  if (noise.size() != 0) {
    if (noise.rows() != projected.rows() || noise.cols() != projected.cols())
      throw std::invalid_argument("kernel_gap: noise shape differs from projected design");
    Z += noise;
  }
  const auto op = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return X * (X.transpose() * v) - Z * (Z.transpose() * v);
  };
  return symmetric_operator_norm(X.rows(), op);
}

Eigen::MatrixXd local_embedding(const Partition& partition, int party, Eigen::Index tau_subs, std::uint64_t master_seed) {
  const int K = partition.num_parties();
  const Eigen::Index own = partition.size(party);
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(partition.num_features(), own + (K - 1) * tau_subs);
  const auto& mine = partition.features(party);
  for (Eigen::Index j = 0; j < own; ++j) theta(mine[static_cast<std::size_t>(j)], j) = 1.0;
  Eigen::Index at = own;
  for (int k = 0; k < K; ++k) {
    if (k == party) continue;
    const auto& fk = partition.features(k);
    const Eigen::MatrixXd pi =
        SrhtProjection(static_cast<Eigen::Index>(fk.size()), tau_subs, projection_seed(master_seed, k)).dense();
    for (std::size_t j = 0; j < fk.size(); ++j) theta.row(fk[j]).segment(at, tau_subs) = pi.row(static_cast<Eigen::Index>(j));
    at += tau_subs;
  }
  return theta;
}

double subspace_embedding_distortion(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                     const Eigen::Ref<const Eigen::MatrixXd>& theta) {
  if (theta.rows() != X.cols()) throw std::invalid_argument("subspace_embedding_distortion: shape mismatch");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) throw std::invalid_argument("subspace_embedding_distortion: zero matrix");
  const Eigen::Index r = (s.array() > rank_threshold(X, s(0))).count();
  const Eigen::MatrixXd VtT = svd.matrixV().leftCols(r).transpose() * theta;
  Eigen::MatrixXd M = -(VtT * VtT.transpose());
  M.diagonal().array() += 1.0;
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
}

double rho(double r, double tau_K, double C_const, double xi) {
  if (!(r >= 1.0) || !(tau_K > 0.0) || !(C_const > 0.0) || !(xi > 0.0 && xi < 1.0))
    throw std::invalid_argument("rho: need r >= 1, tau_K > 0, C > 0, xi in (0, 1)");
  return C_const * std::sqrt(r * std::log(2.0 * r / xi) / tau_K);
}

BoundTerms error_bound(const BoundInputs& in) {
  if (!(in.d_min > 0.0) || in.sigma < 0.0 || in.K < 1 || in.beta_star_norm < 0.0)
    throw std::invalid_argument("error_bound: need d_min > 0, sigma >= 0, K >= 1, ||beta*|| >= 0");
  BoundTerms t;
  t.rho = rho(in.r, in.tau_K, in.C_const, in.xi);
  if (t.rho >= 0.5) {
    t.vacuous = true;
    t.term_i = t.term_ii = t.total = std::numeric_limits<double>::infinity();
    return t;
  }
  const double lead = std::sqrt(static_cast<double>(in.K)) * t.rho / (1.0 - 2.0 * t.rho) * in.beta_star_norm;
  t.term_i = lead;
  const double s = in.sigma;
  t.term_ii = lead * (s / in.d_min) * (2.0 + (s * in.tau_K + s * in.tau_K * in.tau_K) / in.d_min);
  t.total = t.term_i + t.term_ii;
  return t;
}

RegularizerCheck noise_regularizer_check(const Eigen::Ref<const Eigen::MatrixXd>& design, Eigen::Index raw_columns,
                                         const Eigen::Ref<const Eigen::VectorXd>& y,
                                         const Eigen::Ref<const Eigen::VectorXd>& b, double sigma, int n_draws,
                                         std::uint64_t seed) {
  if (design.rows() != y.size() || design.cols() != b.size() || raw_columns < 0 || raw_columns > design.cols())
    throw std::invalid_argument("noise_regularizer_check: shape mismatch");
  const Eigen::Index n = design.rows();
  const Eigen::Index m = design.cols() - raw_columns;
  const Eigen::VectorXd residual = y - design * b;
  const auto b_rand = b.tail(m);

  RegularizerCheck out;
  out.analytic = residual.squaredNorm() + sigma * sigma * static_cast<double>(n) * b_rand.squaredNorm();

  // With W b_rand identically zero every draw gives the same value.
  if (sigma == 0.0 || b_rand.squaredNorm() == 0.0 || n_draws <= 0) {
    out.mc_mean = residual.squaredNorm();
    return out;
  }

  Engine eng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd W(n, m);
  double acc = 0.0;
  for (int draw = 0; draw < n_draws; ++draw) {
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < n; ++i) W(i, j) = sigma * normal(eng);
    acc += (residual - W * b_rand).squaredNorm();
  }
  out.mc_mean = acc / n_draws;
  return out;
}

}  // namespace pride
