#include "pride/cv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "pride/rng.hpp"

namespace pride {

namespace {

std::uint64_t folds_seed(std::uint64_t seed) { return derive_seed(seed, "cv-folds"); }

std::uint64_t fold_release_seed(std::uint64_t seed, int fold) {
  return derive_seed(seed, "cv-fold-" + std::to_string(fold));
}

void validate(const std::vector<double>& grid, const CvOptions& options, Eigen::Index n) {
  if (options.folds < 2) throw std::invalid_argument("cv: need at least two folds");
  if (grid.empty()) throw std::invalid_argument("cv: empty lambda grid");
  for (const double l : grid)
    if (!(l > 0.0)) throw std::invalid_argument("cv: lambdas must be positive");
  if (n < options.folds) throw std::invalid_argument("cv: a fold would have no rows");
}

// Dual solutions over the grid, in grid order. SDCA runs from the largest
// lambda down, warm starting each solve from the previous one.
std::vector<Eigen::VectorXd> dual_path(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                       const Eigen::Ref<const Eigen::VectorXd>& y, const std::vector<double>& grid,
                                       const CvOptions& options, std::uint64_t solver_seed) {
  std::vector<Eigen::VectorXd> out(grid.size());
  if (options.loss == LossKind::squared && options.solver.method == DualMethod::exact) {
    const RidgeDualPath path(design, y);
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = path.alpha(grid[i]);
    return out;
  }
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return grid[a] > grid[b]; });
  SolverOptions opts = options.solver;
  opts.seed = solver_seed;
  for (const std::size_t i : order) {
    const DualState st = sdca_solve(design, y, grid[i], options.loss, opts);
    out[i] = st.alpha;
    opts.warm_start = st.alpha;
  }
  return out;
}

double validation_loss(LossKind loss, const Eigen::Ref<const Eigen::VectorXd>& y,
                       const Eigen::Ref<const Eigen::VectorXd>& pred) {
  if (loss == LossKind::squared) return (y - pred).squaredNorm() / static_cast<double>(y.size());
  double s = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) s += loss_value(loss, pred(i), y(i));
  return s / static_cast<double>(y.size());
}

std::vector<Eigen::Index> rows_where(const std::vector<int>& folds, int fold, bool equal) {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < folds.size(); ++i)
    if ((folds[i] == fold) == equal) rows.push_back(static_cast<Eigen::Index>(i));
  return rows;
}

CvTable make_table(const std::vector<double>& grid, int folds) {
  CvTable t;
  t.lambdas = grid;
  t.fold_loss.assign(grid.size(), std::vector<double>(static_cast<std::size_t>(folds), 0.0));
  return t;
}

void finish(CvTable& t) {
  t.mean_loss.resize(t.lambdas.size());
  for (std::size_t i = 0; i < t.lambdas.size(); ++i) {
    const auto& f = t.fold_loss[i];
    t.mean_loss[i] = std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(f.size());
  }
  t.selected_index =
      static_cast<std::size_t>(std::min_element(t.mean_loss.begin(), t.mean_loss.end()) - t.mean_loss.begin());
  t.selected_lambda = t.lambdas[t.selected_index];
}

// Folds over the rows of one design, scoring design_val * w with w the
// primal weights on the full design.
CvTable design_cv(const Eigen::Ref<const Eigen::MatrixXd>& design, const Eigen::Ref<const Eigen::VectorXd>& y,
                  const std::vector<double>& grid, const CvOptions& options, std::uint64_t solver_seed) {
  validate(grid, options, design.rows());
  const auto folds = fold_assignment(design.rows(), options.folds, folds_seed(options.seed));
  CvTable t = make_table(grid, options.folds);
  for (int f = 0; f < options.folds; ++f) {
    const auto tr = rows_where(folds, f, false);
    const auto va = rows_where(folds, f, true);
    const Eigen::MatrixXd Xtr = design(tr, Eigen::all);
    const Eigen::VectorXd ytr = y(tr);
    const Eigen::MatrixXd Xva = design(va, Eigen::all);
    const Eigen::VectorXd yva = y(va);
    const auto alphas = dual_path(Xtr, ytr, grid, options, solver_seed);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Eigen::VectorXd w = primal_recover(Xtr, alphas[i], grid[i]);
      t.fold_loss[i][static_cast<std::size_t>(f)] = validation_loss(options.loss, yva, Xva * w);
    }
  }
  finish(t);
  return t;
}

}  // namespace

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0 && hi >= lo) || points < 1) throw std::invalid_argument("log_grid: need 0 < lo <= hi, points >= 1");
  std::vector<double> g(static_cast<std::size_t>(points));
  if (points == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (points - 1));
  return g;
}

std::vector<double> default_lambda_grid() { return log_grid(1e-4, 1e3, 30); }

std::vector<int> fold_assignment(Eigen::Index n, int folds, std::uint64_t seed) {
  if (folds < 1 || n < folds) throw std::invalid_argument("fold_assignment: a fold would have no rows");
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Engine eng(seed);
  std::shuffle(perm.begin(), perm.end(), eng);
  std::vector<int> out(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < perm.size(); ++i) out[static_cast<std::size_t>(perm[i])] = static_cast<int>(i % folds);
  return out;
}

CvTable global_cv(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                  const Partition& partition, Eigen::Index tau_subs, const PrivacyParams& privacy,
                  const std::vector<double>& lambda_grid, const CvOptions& options, SigmaPolicy policy) {
  validate(lambda_grid, options, X.rows());
  if (X.rows() != y.size() || X.cols() != partition.num_features())
    throw std::invalid_argument("global_cv: dimension mismatch");
  const int K = partition.num_parties();
  const auto folds = fold_assignment(X.rows(), options.folds, folds_seed(options.seed));
  CvTable t = make_table(lambda_grid, options.folds);

  for (int f = 0; f < options.folds; ++f) {
    const auto tr = rows_where(folds, f, false);
    const auto va = rows_where(folds, f, true);
    const Eigen::MatrixXd Xtr = X(tr, Eigen::all);
    const Eigen::VectorXd ytr = y(tr);
    const Eigen::MatrixXd Xva = X(va, Eigen::all);
    const Eigen::VectorXd yva = y(va);

    const std::uint64_t release = fold_release_seed(options.seed, f);
    const auto sigmas = party_sigmas(Xtr, partition, privacy, policy);
    const auto shares = exchange_shares(Xtr, partition, tau_subs, sigmas, release);

    std::vector<Eigen::VectorXd> preds(lambda_grid.size(), Eigen::VectorXd::Zero(Xva.rows()));
    for (int k = 0; k < K; ++k) {
      const Eigen::MatrixXd raw = partition.block(Xtr, k);
      const LocalDesign design = assemble_local_design(k, raw, shares, K);
      const auto alphas = dual_path(design.matrix, ytr, lambda_grid, options, solver_seed(release, k));
      const Eigen::MatrixXd raw_va = partition.block(Xva, k);
      for (std::size_t i = 0; i < lambda_grid.size(); ++i)
        preds[i] += raw_va * primal_recover(raw, alphas[i], lambda_grid[i]);
    }
    for (std::size_t i = 0; i < lambda_grid.size(); ++i)
      t.fold_loss[i][static_cast<std::size_t>(f)] = validation_loss(options.loss, yva, preds[i]);
  }
  finish(t);
  return t;
}

CvTable local_cv(const LocalDesign& design, const Eigen::Ref<const Eigen::VectorXd>& y,
                 const std::vector<double>& lambda_grid, const CvOptions& options) {
  if (design.matrix.rows() != y.size()) throw std::invalid_argument("local_cv: dimension mismatch");
  return design_cv(design.matrix, y, lambda_grid, options,
                   solver_seed(fold_release_seed(options.seed, 0), design.party));
}

CvTable single_machine_cv(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                          const std::vector<double>& lambda_grid, const CvOptions& options) {
  if (X.rows() != y.size()) throw std::invalid_argument("single_machine_cv: dimension mismatch");
  return design_cv(X, y, lambda_grid, options, solver_seed(fold_release_seed(options.seed, 0), 0));
}

}  // namespace pride
