#include "pride/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "pride/analysis.hpp"
#include "pride/baselines.hpp"
#include "pride/cv.hpp"
#include "pride/rng.hpp"

namespace pride {

using nlohmann::json;

namespace {

const std::vector<std::string> kMethods = {"pride", "dual_loco", "semi_nb", "single_machine"};

const std::vector<std::string> kMetrics = {"err_true", "err_true_x", "err_true_c", "err_star", "err_star_x",
                                           "err_star_c", "corr_true", "corr_star", "train_mse", "test_mse",
                                           "sigma_max", "lambda"};

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    s += fmt(v[i]);
  }
  return s;
}

std::string eps_label(const std::optional<double>& e) { return e ? fmt(*e) : std::string("none"); }

// ---- config parsing -------------------------------------------------------

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <class T>
void maybe(const json& j, const std::string& key, T& out, const std::string& where) {
  if (j.contains(key)) out = get<T>(j, key, where);
}

std::vector<double> parse_grid(const json& g) {
  if (g.is_array()) return g.get<std::vector<double>>();
  check_keys(g, {"lo", "hi", "points"}, "lambda.grid");
  try {
    return log_grid(get<double>(g, "lo", "lambda.grid"), get<double>(g, "hi", "lambda.grid"),
                    get<int>(g, "points", "lambda.grid"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("lambda.grid: ") + e.what());
  }
}

ExperimentConfig from_json(const json& j) {
  ExperimentConfig c;
  check_keys(j,
             {"dataset", "parties", "partition", "tau_subs", "epsilon", "no_privacy", "delta", "sigma_policy", "lambda",
              "loss", "solver", "methods", "n_seeds", "master_seed", "train_fraction", "output_dir"},
             "config");

  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    check_keys(d, {"synthetic", "csv"}, "dataset");
    if (d.contains("synthetic") == d.contains("csv"))
      throw ConfigError("dataset: give exactly one of 'synthetic' or 'csv'");
    if (d.contains("synthetic")) {
      const json& s = d["synthetic"];
      check_keys(s, {"grid_side", "n", "n_confound_pairs", "n_signal_pcs", "target_snr", "grf_length_scale"},
                 "dataset.synthetic");
      auto& sc = c.synthetic_config;
      maybe(s, "grid_side", sc.grid_side, "dataset.synthetic");
      maybe(s, "n", sc.n, "dataset.synthetic");
      maybe(s, "n_confound_pairs", sc.n_confound_pairs, "dataset.synthetic");
      maybe(s, "n_signal_pcs", sc.n_signal_pcs, "dataset.synthetic");
      maybe(s, "target_snr", sc.target_snr, "dataset.synthetic");
      maybe(s, "grf_length_scale", sc.grf_length_scale, "dataset.synthetic");
    } else {
      const json& s = d["csv"];
      check_keys(s, {"path", "response"}, "dataset.csv");
      c.synthetic = false;
      c.csv_path = get<std::string>(s, "path", "dataset.csv");
      maybe(s, "response", c.csv_response, "dataset.csv");
    }
  }
  maybe(j, "parties", c.parties, "config");
  if (j.contains("partition")) {
    const json& p = j["partition"];
    if (p.is_string()) {
      if (p.get<std::string>() != "contiguous") throw ConfigError("partition: expected 'contiguous' or index sets");
    } else {
      c.partition_sets = get<std::vector<std::vector<Eigen::Index>>>(j, "partition", "config");
    }
  }
  if (j.contains("tau_subs")) {
    const json& t = j["tau_subs"];
    check_keys(t, {"fractions", "absolute"}, "tau_subs");
    if (t.contains("fractions") == t.contains("absolute"))
      throw ConfigError("tau_subs: give exactly one of 'fractions' or 'absolute'");
    c.tau_fractions = t.contains("fractions");
    c.tau_subs = get<std::vector<double>>(t, c.tau_fractions ? "fractions" : "absolute", "tau_subs");
  }
  maybe(j, "epsilon", c.epsilons, "config");
  maybe(j, "no_privacy", c.no_privacy, "config");
  maybe(j, "delta", c.delta, "config");
  if (j.contains("sigma_policy")) {
    const auto s = get<std::string>(j, "sigma_policy", "config");
    if (s == "per_party") c.sigma_policy = SigmaPolicy::per_party;
    else if (s == "max") c.sigma_policy = SigmaPolicy::max_over_parties;
    else throw ConfigError("sigma_policy: expected 'per_party' or 'max'");
  }
  if (j.contains("lambda")) {
    const json& l = j["lambda"];
    check_keys(l, {"mode", "value", "grid", "folds"}, "lambda");
    const auto mode = l.contains("mode") ? get<std::string>(l, "mode", "lambda") : std::string("fixed");
    if (mode == "fixed") c.lambda.mode = LambdaMode::fixed;
    else if (mode == "cv-global") c.lambda.mode = LambdaMode::cv_global;
    else if (mode == "cv-local") c.lambda.mode = LambdaMode::cv_local;
    else throw ConfigError("lambda.mode: expected fixed, cv-global or cv-local");
    maybe(l, "value", c.lambda.value, "lambda");
    maybe(l, "folds", c.lambda.folds, "lambda");
    if (l.contains("grid")) c.lambda.grid = parse_grid(l["grid"]);
  }
  if (j.contains("loss")) {
    try {
      c.loss = parse_loss(get<std::string>(j, "loss", "config"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("loss: ") + e.what());
    }
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    check_keys(s, {"method", "max_epochs", "tol"}, "solver");
    if (s.contains("method")) {
      const auto m = get<std::string>(s, "method", "solver");
      if (m == "sdca") c.solver = DualMethod::sdca;
      else if (m == "exact") c.solver = DualMethod::exact;
      else throw ConfigError("solver.method: expected 'sdca' or 'exact'");
    }
    maybe(s, "max_epochs", c.max_epochs, "solver");
    maybe(s, "tol", c.tol, "solver");
  }
  maybe(j, "methods", c.methods, "config");
  maybe(j, "n_seeds", c.n_seeds, "config");
  maybe(j, "master_seed", c.master_seed, "config");
  maybe(j, "train_fraction", c.train_fraction, "config");
  maybe(j, "output_dir", c.output_dir, "config");
  c.validate();
  return c;
}

bool wants(const ExperimentConfig& c, const std::string& m) {
  return std::find(c.methods.begin(), c.methods.end(), m) != c.methods.end();
}

// ---- one seed -------------------------------------------------------------

struct SeedData {
  DataSet train;
  DataSet test;
};

SeedData load_seed(const ExperimentConfig& c, const DataSet* csv, std::uint64_t run_seed) {
  const bool center = c.loss == LossKind::squared;
  if (c.synthetic) {
    SyntheticConfig sc = c.synthetic_config;
    sc.seed = derive_seed(run_seed, "synthetic");
    const DataSet raw = generate_confounded(sc);
    auto [tr, te] = train_test_split(raw, c.train_fraction, derive_seed(run_seed, "split"), center);
    return {std::move(tr), std::move(te)};
  }
  auto [tr, te] = train_test_split(*csv, c.train_fraction, derive_seed(run_seed, "split"), center);
  return {std::move(tr), std::move(te)};
}

Partition make_partition(const ExperimentConfig& c, Eigen::Index p) {
  if (c.partition_sets.empty()) return Partition::contiguous(p, c.parties);
  return Partition::from_sets(p, c.partition_sets);
}

std::optional<double> normalized_error(const Eigen::VectorXd& b, const Eigen::VectorXd& ref,
                                       const std::vector<Eigen::Index>& idx) {
  const Eigen::VectorXd r = ref(idx);
  const double den = r.squaredNorm();
  if (idx.empty() || den == 0.0) return std::nullopt;
  return (b(idx) - r).squaredNorm() / den;
}

std::optional<double> safe_corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  try {
    return coefficient_correlation(a, b);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::optional<double> safe_mse(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  try {
    return prediction_mse_normalized(y, yhat);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void fill_metrics(ExperimentRow& row, const Eigen::VectorXd& beta, const SeedData& d, const Eigen::VectorXd& beta_star) {
  std::vector<Eigen::Index> all(static_cast<std::size_t>(beta.size())), xs, cs;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    all[static_cast<std::size_t>(j)] = j;
    if (static_cast<std::size_t>(j) < d.train.block_labels.size()) {
      if (d.train.block_labels[static_cast<std::size_t>(j)] == BlockLabel::x_block) xs.push_back(j);
      if (d.train.block_labels[static_cast<std::size_t>(j)] == BlockLabel::c_block) cs.push_back(j);
    }
  }
  if (d.train.true_beta) {
    const Eigen::VectorXd& t = *d.train.true_beta;
    row.err_true = normalized_error(beta, t, all);
    row.err_true_x = normalized_error(beta, t, xs);
    row.err_true_c = normalized_error(beta, t, cs);
    row.corr_true = safe_corr(beta, t);
  }
  if (beta_star.size() == beta.size()) {
    row.err_star = normalized_error(beta, beta_star, all);
    row.err_star_x = normalized_error(beta, beta_star, xs);
    row.err_star_c = normalized_error(beta, beta_star, cs);
    row.corr_star = safe_corr(beta, beta_star);
  }
  row.train_mse = safe_mse(d.train.y, d.train.X * beta);
  row.test_mse = safe_mse(d.test.y, d.test.X * beta);
}

class SeedRunner {
 public:
  SeedRunner(const ExperimentConfig& c, const DataSet* csv, int seed)
      : c_(c), csv_(csv), seed_(seed), run_seed_(derive_seed(c.master_seed, "seed-" + std::to_string(seed))) {}

  std::vector<ExperimentRow> run() {
    std::vector<ExperimentRow> out;
    SeedData d;
    try {
      d = load_seed(c_, csv_, run_seed_);
    } catch (const std::exception& e) {
      out.push_back(failed("data", std::nullopt, 0, e.what()));
      return out;
    }
    const Partition part = make_partition(c_, d.train.p());
    solver_.method = c_.solver;
    solver_.max_epochs = c_.max_epochs;
    solver_.tol = c_.tol;
    solver_.seed = derive_seed(run_seed_, "baseline-sdca-permutation");
    grid_ = c_.lambda.grid.empty() ? default_lambda_grid() : c_.lambda.grid;

    // Reference optimum, also the single-machine row.
    ExperimentRow sm = cell("single_machine", std::nullopt, 0);
    Eigen::VectorXd beta_star;
    timed(sm, [&] {
      const double lam = c_.lambda.mode == LambdaMode::fixed ? c_.lambda.value
                                                              : single_machine_cv(d.train.X, d.train.y, grid_,
                                                                                  cv_options()).selected_lambda;
      beta_star = single_machine(d.train.X, d.train.y, lam, c_.loss, solver_).beta;
      sm.lambdas = {lam};
      fill_metrics(sm, beta_star, d, beta_star);
    });

    for (const Eigen::Index tau : resolve_tau_subs(c_, part)) {
      const std::uint64_t release = derive_seed(run_seed_, "release-tau-" + std::to_string(tau));
      if (wants(c_, "pride")) {
        for (const double eps : c_.epsilons)
          out.push_back(distributed("pride", eps, tau, PrivacyParams::with_epsilon(eps, c_.delta), release, d, part,
                                    beta_star));
        if (c_.no_privacy)
          out.push_back(distributed("pride", std::nullopt, tau, PrivacyParams::none(), release, d, part, beta_star));
      }
      if (wants(c_, "dual_loco"))
        out.push_back(distributed("dual_loco", std::nullopt, tau, PrivacyParams::none(), release, d, part, beta_star));
    }

    if (wants(c_, "semi_nb")) {
      ExperimentRow nb = cell("semi_nb", std::nullopt, 0);
      timed(nb, [&] {
        std::vector<double> lams(static_cast<std::size_t>(part.num_parties()), c_.lambda.value);
        if (c_.lambda.mode != LambdaMode::fixed)
          for (int k = 0; k < part.num_parties(); ++k)
            lams[static_cast<std::size_t>(k)] =
                single_machine_cv(part.block(d.train.X, k), d.train.y, grid_, cv_options()).selected_lambda;
        const auto r = semi_naive_bayes(d.train.X, d.train.y, part, lams, c_.loss, solver_);
        nb.lambdas = lams;
        fill_metrics(nb, r.beta, d, beta_star);
      });
      out.push_back(std::move(nb));
    }
    if (wants(c_, "single_machine")) out.push_back(std::move(sm));
    return out;
  }

 private:
  CvOptions cv_options() const {
    CvOptions o;
    o.folds = c_.lambda.folds;
    o.loss = c_.loss;
    o.solver = solver_;
    o.seed = derive_seed(run_seed_, "cv");
    return o;
  }

  ExperimentRow cell(const std::string& method, std::optional<double> eps, Eigen::Index tau) const {
    ExperimentRow r;
    r.method = method;
    r.epsilon = eps;
    r.delta = c_.delta;
    r.tau_subs = tau;
    r.seed = seed_;
    r.run_seed = run_seed_;
    return r;
  }

  ExperimentRow failed(const std::string& method, std::optional<double> eps, Eigen::Index tau,
                       const std::string& what) const {
    ExperimentRow r = cell(method, eps, tau);
    r.status = "error: " + what;
    return r;
  }

  template <class F>
  void timed(ExperimentRow& row, F&& f) const {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      f();
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
    }
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  ExperimentRow distributed(const std::string& method, std::optional<double> eps, Eigen::Index tau,
                            const PrivacyParams& privacy, std::uint64_t release, const SeedData& d,
                            const Partition& part, const Eigen::VectorXd& beta_star) const {
    ExperimentRow row = cell(method, eps, tau);
    timed(row, [&] {
      PrideConfig pc;
      pc.tau_subs = tau;
      pc.lambda = c_.lambda.value;
      pc.privacy = privacy;
      pc.loss = c_.loss;
      pc.solver = solver_;
      pc.sigma_policy = c_.sigma_policy;
      pc.master_seed = release;

      if (c_.lambda.mode == LambdaMode::cv_global) {
        pc.lambda = global_cv(d.train.X, d.train.y, part, tau, privacy, grid_, cv_options(), c_.sigma_policy)
                        .selected_lambda;
      } else if (c_.lambda.mode == LambdaMode::cv_local) {
        require_standardized(d.train.X);
        const auto sig = party_sigmas(d.train.X, part, privacy, c_.sigma_policy);
        const auto shares = exchange_shares(d.train.X, part, tau, sig, release);
        const int K = part.num_parties();
        for (int k = 0; k < K; ++k) {
          const LocalDesign ld = assemble_local_design(k, part.block(d.train.X, k), shares, K);
          pc.party_lambda.push_back(local_cv(ld, d.train.y, grid_, cv_options()).selected_lambda);
        }
        const PrideResult r = solve_with_shares(d.train.X, d.train.y, part, shares, pc);
        finish(row, r, d, beta_star);
        return;
      }
      const PrideResult r = method == "dual_loco" ? run_dual_loco(d.train.X, d.train.y, part, pc)
                                                  : run_pride(d.train.X, d.train.y, part, pc);
      finish(row, r, d, beta_star);
    });
    return row;
  }

  static void finish(ExperimentRow& row, const PrideResult& r, const SeedData& d, const Eigen::VectorXd& beta_star) {
    row.lambdas = r.party_lambda;
    if (std::adjacent_find(row.lambdas.begin(), row.lambdas.end(), std::not_equal_to<>()) == row.lambdas.end() &&
        !row.lambdas.empty())
      row.lambdas.resize(1);
    for (const auto& di : r.diagnostics) row.sigmas.push_back(di.sigma);
    fill_metrics(row, r.global_beta, d, beta_star);
    if (!r.converged()) row.status = "ok: not converged";
  }

  const ExperimentConfig& c_;
  const DataSet* csv_;
  int seed_;
  std::uint64_t run_seed_;
  SolverOptions solver_;
  std::vector<double> grid_;
};

double metric_value(const ExperimentRow& r, const std::string& m) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto v = [&](const std::optional<double>& o) { return o ? *o : nan; };
  if (m == "err_true") return v(r.err_true);
  if (m == "err_true_x") return v(r.err_true_x);
  if (m == "err_true_c") return v(r.err_true_c);
  if (m == "err_star") return v(r.err_star);
  if (m == "err_star_x") return v(r.err_star_x);
  if (m == "err_star_c") return v(r.err_star_c);
  if (m == "corr_true") return v(r.corr_true);
  if (m == "corr_star") return v(r.corr_star);
  if (m == "train_mse") return v(r.train_mse);
  if (m == "test_mse") return v(r.test_mse);
  if (m == "sigma_max") return r.sigmas.empty() ? 0.0 : *std::max_element(r.sigmas.begin(), r.sigmas.end());
  if (m == "lambda") {
    if (r.lambdas.empty()) return nan;
    double s = 0.0;
    for (double l : r.lambdas) s += l;
    return s / static_cast<double>(r.lambdas.size());
  }
  return nan;
}

bool row_ok(const ExperimentRow& r) { return r.status.rfind("ok", 0) == 0; }

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << content;
  if (!f) throw std::runtime_error("write failed: " + p.string());
}

std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (parties < 1) throw ConfigError("parties must be >= 1");
  if (!partition_sets.empty() && static_cast<int>(partition_sets.size()) != parties)
    throw ConfigError("partition: number of sets must equal parties");
  if (tau_subs.empty()) throw ConfigError("tau_subs: grid is empty");
  for (const double t : tau_subs) {
    if (tau_fractions && !(t > 0.0 && t <= 1.0)) throw ConfigError("tau_subs: fractions must lie in (0, 1]");
    if (!tau_fractions && !(t >= 1.0 && t == std::floor(t))) throw ConfigError("tau_subs: absolute values must be positive integers");
  }
  if (epsilons.empty() && !no_privacy && wants(*this, "pride")) throw ConfigError("epsilon: grid is empty");
  for (const double e : epsilons)
    if (!(e > 0.0) || !std::isfinite(e)) throw ConfigError("epsilon: values must be positive and finite");
  if (!(delta > 0.0 && delta < 0.5)) throw ConfigError("delta must lie in (0, 0.5)");
  if (lambda.mode == LambdaMode::fixed && !(lambda.value > 0.0)) throw ConfigError("lambda.value must be positive");
  if (lambda.mode != LambdaMode::fixed && lambda.folds < 2) throw ConfigError("lambda.folds must be >= 2");
  for (const double l : lambda.grid)
    if (!(l > 0.0)) throw ConfigError("lambda.grid: values must be positive");
  if (solver == DualMethod::exact && loss != LossKind::squared)
    throw ConfigError("solver.method 'exact' needs the squared loss");
  if (max_epochs < 1 || !(tol > 0.0)) throw ConfigError("solver: max_epochs >= 1 and tol > 0 required");
  if (methods.empty()) throw ConfigError("methods: list is empty");
  for (const auto& m : methods)
    if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end())
      throw ConfigError("methods: unknown method '" + m + "'");
  if (n_seeds < 1) throw ConfigError("n_seeds must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
  if (synthetic) {
    const auto& s = synthetic_config;
    if (s.grid_side < 2 || s.n < 2 || !(s.grf_length_scale > 0.0) || !(s.target_snr > 0.0))
      throw ConfigError("dataset.synthetic: invalid generator settings");
  } else if (csv_path.empty()) {
    throw ConfigError("dataset.csv.path is empty");
  }
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  ExperimentConfig c = parse_experiment_config(ss.str());
  if (!c.synthetic && std::filesystem::path(c.csv_path).is_relative())
    c.csv_path = (path.parent_path() / c.csv_path).string();
  return c;
}

std::string to_json(const ExperimentConfig& c) {
  json j;
  if (c.synthetic) {
    const auto& s = c.synthetic_config;
    j["dataset"]["synthetic"] = {{"grid_side", s.grid_side},
                                 {"n", s.n},
                                 {"n_confound_pairs", s.n_confound_pairs},
                                 {"n_signal_pcs", s.n_signal_pcs},
                                 {"target_snr", s.target_snr},
                                 {"grf_length_scale", s.grf_length_scale}};
  } else {
    j["dataset"]["csv"] = {{"path", c.csv_path}, {"response", c.csv_response}};
  }
  j["parties"] = c.parties;
  if (c.partition_sets.empty()) j["partition"] = "contiguous";
  else j["partition"] = c.partition_sets;
  j["tau_subs"][c.tau_fractions ? "fractions" : "absolute"] = c.tau_subs;
  j["epsilon"] = c.epsilons;
  j["no_privacy"] = c.no_privacy;
  j["delta"] = c.delta;
  j["sigma_policy"] = c.sigma_policy == SigmaPolicy::per_party ? "per_party" : "max";
  const char* modes[] = {"fixed", "cv-global", "cv-local"};
  j["lambda"] = {{"mode", modes[static_cast<int>(c.lambda.mode)]}, {"value", c.lambda.value}, {"folds", c.lambda.folds}};
  if (!c.lambda.grid.empty()) j["lambda"]["grid"] = c.lambda.grid;
  j["loss"] = std::string(to_string(c.loss));
  j["solver"] = {{"method", c.solver == DualMethod::exact ? "exact" : "sdca"},
                 {"max_epochs", c.max_epochs},
                 {"tol", c.tol}};
  j["methods"] = c.methods;
  j["n_seeds"] = c.n_seeds;
  j["master_seed"] = c.master_seed;
  j["train_fraction"] = c.train_fraction;
  j["output_dir"] = c.output_dir;
  return j.dump(2) + "\n";
}

std::pair<double, double> SummaryRow::stat(const std::string& name) const {
  for (const auto& [k, v] : stats)
    if (k == name) return v;
  throw std::out_of_range("summary has no metric " + name);
}

const SummaryRow* ExperimentResult::find(const std::string& method, std::optional<double> epsilon,
                                         Eigen::Index tau_subs) const {
  for (const auto& s : summary)
    if (s.method == method && s.epsilon == epsilon && s.tau_subs == tau_subs) return &s;
  return nullptr;
}

std::vector<Eigen::Index> resolve_tau_subs(const ExperimentConfig& config, const Partition& partition) {
  Eigen::Index smallest = partition.size(0);
  for (int k = 1; k < partition.num_parties(); ++k) smallest = std::min(smallest, partition.size(k));
  std::vector<Eigen::Index> out;
  for (const double t : config.tau_subs) {
    Eigen::Index v = config.tau_fractions ? static_cast<Eigen::Index>(std::llround(t * static_cast<double>(smallest)))
                                          : static_cast<Eigen::Index>(t);
    v = std::max<Eigen::Index>(v, 1);
    if (v > smallest)
      throw ConfigError("tau_subs " + std::to_string(v) + " exceeds the smallest party (" + std::to_string(smallest) +
                        " features)");
    out.push_back(v);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, int jobs) {
  config.validate();
  std::optional<DataSet> csv;
  if (!config.synthetic) csv = load_csv(config.csv_path, config.csv_response);
  {
    // Fail at startup, not per cell, on a bad partition or tau grid.
    const Eigen::Index p = csv ? csv->p() : 2 * config.synthetic_config.block_features();
    try {
      resolve_tau_subs(config, make_partition(config, p));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("partition: ") + e.what());
    }
  }

  std::vector<std::vector<ExperimentRow>> per_seed(static_cast<std::size_t>(config.n_seeds));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int s = next++; s < config.n_seeds; s = next++)
      per_seed[static_cast<std::size_t>(s)] = SeedRunner(config, csv ? &*csv : nullptr, s).run();
  };
  const int n_threads = std::clamp(jobs, 1, config.n_seeds);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult res;
  for (auto& rows : per_seed)
    for (auto& r : rows) res.rows.push_back(std::move(r));
  res.summary = summarize(res.rows);
  return res;
}

std::vector<SummaryRow> summarize(const std::vector<ExperimentRow>& rows) {
  std::vector<SummaryRow> out;
  std::map<std::tuple<std::string, std::string, Eigen::Index>, std::size_t> index;
  std::vector<std::vector<const ExperimentRow*>> members;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.method, eps_label(r.epsilon), r.tau_subs);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      SummaryRow s;
      s.method = r.method;
      s.epsilon = r.epsilon;
      s.tau_subs = r.tau_subs;
      out.push_back(s);
      members.emplace_back();
    }
    members[it->second].push_back(&r);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    auto& s = out[g];
    for (const auto* r : members[g]) (row_ok(*r) ? s.n_ok : s.n_failed)++;
    for (const auto& m : kMetrics) {
      std::vector<double> v;
      for (const auto* r : members[g]) {
        if (!row_ok(*r)) continue;
        const double x = metric_value(*r, m);
        if (!std::isnan(x)) v.push_back(x);
      }
      double mean = std::numeric_limits<double>::quiet_NaN();
      double se = std::numeric_limits<double>::quiet_NaN();
      if (!v.empty()) {
        mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        se = 0.0;
        if (v.size() > 1) {
          double ss = 0.0;
          for (double x : v) ss += (x - mean) * (x - mean);
          se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
        }
      }
      s.stats.emplace_back(m, std::make_pair(mean, se));
    }
  }
  return out;
}

std::string detail_csv(const ExperimentResult& result) {
  std::string s =
      "method,epsilon,delta,tau_subs,lambda,seed,run_seed,status,sigma,err_true,err_true_x,err_true_c,"
      "err_star,err_star_x,err_star_c,corr_true,corr_star,train_mse,test_mse\n";
  for (const auto& r : result.rows) {
    s += r.method + ',' + eps_label(r.epsilon) + ',' + fmt(r.delta) + ',' + std::to_string(r.tau_subs) + ',' +
         join(r.lambdas) + ',' + std::to_string(r.seed) + ',' + std::to_string(r.run_seed) + ',' + csv_safe(r.status) +
         ',' + join(r.sigmas) + ',' + fmt(r.err_true) + ',' + fmt(r.err_true_x) + ',' + fmt(r.err_true_c) + ',' +
         fmt(r.err_star) + ',' + fmt(r.err_star_x) + ',' + fmt(r.err_star_c) + ',' + fmt(r.corr_true) + ',' +
         fmt(r.corr_star) + ',' + fmt(r.train_mse) + ',' + fmt(r.test_mse) + '\n';
  }
  return s;
}

std::string summary_csv(const ExperimentResult& result) {
  std::string s = "method,epsilon,tau_subs,n_ok,n_failed";
  for (const auto& m : kMetrics) s += ',' + m + "_mean," + m + "_se";
  s += '\n';
  for (const auto& r : result.summary) {
    s += r.method + ',' + eps_label(r.epsilon) + ',' + std::to_string(r.tau_subs) + ',' + std::to_string(r.n_ok) + ',' +
         std::to_string(r.n_failed);
    for (const auto& [m, v] : r.stats) s += ',' + fmt(v.first) + ',' + fmt(v.second);
    s += '\n';
  }
  return s;
}

std::string summary_json(const ExperimentResult& result) {
  json arr = json::array();
  for (const auto& r : result.summary) {
    json o;
    o["method"] = r.method;
    o["epsilon"] = r.epsilon ? json(*r.epsilon) : json(nullptr);
    o["tau_subs"] = r.tau_subs;
    o["n_ok"] = r.n_ok;
    o["n_failed"] = r.n_failed;
    for (const auto& [m, v] : r.stats) {
      o[m]["mean"] = std::isfinite(v.first) ? json(v.first) : json(nullptr);
      o[m]["se"] = std::isfinite(v.second) ? json(v.second) : json(nullptr);
    }
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

std::string timings_csv(const ExperimentResult& result) {
  std::string s = "method,epsilon,tau_subs,seed,wall_seconds\n";
  for (const auto& r : result.rows)
    s += r.method + ',' + eps_label(r.epsilon) + ',' + std::to_string(r.tau_subs) + ',' + std::to_string(r.seed) + ',' +
         fmt(r.wall_seconds) + '\n';
  return s;
}

void prepare_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  const auto probe = dir / ".write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw std::runtime_error("output directory is not writable: " + dir.string());
  }
  std::filesystem::remove(probe, ec);
}

void write_outputs(const ExperimentResult& result, const ExperimentConfig& config, const std::filesystem::path& dir) {
  prepare_output_dir(dir);
  write_file(dir / "detail.csv", detail_csv(result));
  write_file(dir / "summary.csv", summary_csv(result));
  write_file(dir / "summary.json", summary_json(result));
  write_file(dir / "timings.csv", timings_csv(result));
  write_file(dir / "config.json", to_json(config));
}

}  // namespace pride
