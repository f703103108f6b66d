// pride: batch runner and calculators for private vertically partitioned regression.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pride/analysis.hpp"
#include "pride/data.hpp"
#include "pride/experiment.hpp"
#include "pride/privacy.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_generate(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out) {
  pride::SyntheticConfig sc;
  if (!config_path.empty()) {
    const auto c = pride::load_experiment_config(config_path);
    if (!c.synthetic) throw pride::ConfigError("generate: config dataset is not synthetic");
    sc = c.synthetic_config;
  }
  if (seed) sc.seed = *seed;
  const pride::DataSet d = pride::generate_confounded(sc);
  fs::path path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  pride::write_csv(path, d);

  fs::path beta_path = path;
  beta_path.replace_filename(path.stem().string() + "_beta.csv");
  std::ofstream f(beta_path);
  if (!f) throw std::runtime_error("cannot write " + beta_path.string());
  f.precision(17);
  f << "feature,block,beta\n";
  for (Eigen::Index j = 0; j < d.p(); ++j) {
    const auto label = d.block_labels[static_cast<std::size_t>(j)];
    f << d.column_names[static_cast<std::size_t>(j)] << ','
      << (label == pride::BlockLabel::x_block ? "X" : label == pride::BlockLabel::c_block ? "C" : "") << ','
      << (*d.true_beta)(j) << '\n';
  }
  std::cout << "wrote " << path.string() << " (" << d.n() << " rows, " << d.p() << " features) and "
            << beta_path.string() << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out, int jobs) {
  auto c = pride::load_experiment_config(config_path);
  if (seed) c.master_seed = *seed;
  if (!out.empty()) c.output_dir = out;
  pride::prepare_output_dir(c.output_dir);
  const auto res = pride::run_experiment(c, jobs);
  pride::write_outputs(res, c, c.output_dir);
  int failed = 0;
  for (const auto& r : res.rows)
    if (r.status.rfind("ok", 0) != 0) ++failed;
  std::cout << "cells: " << res.rows.size() << ", failed: " << failed << ", output: " << c.output_dir << "\n";
  for (const auto& r : res.rows)
    if (r.status.rfind("ok", 0) != 0)
      std::cerr << "cell " << r.method << " seed " << r.seed << ": " << r.status << "\n";
  return 0;
}

int cmd_sigma(const std::vector<double>& eps, const std::vector<double>& thetas, double delta, double w2) {
  std::printf("theta,epsilon,delta,sigma\n");
  for (const double t : thetas)
    for (const double e : eps) std::printf("%.6g,%.6g,%.6g,%.6f\n", t, e, delta, pride::noise_sigma(e, delta, t, w2));
  return 0;
}

int cmd_bound(const pride::BoundInputs& in) {
  const auto b = pride::error_bound(in);
  std::printf("rho,%.10g\n", b.rho);
  if (b.vacuous) {
    std::printf("vacuous,true\n");
    return 0;
  }
  std::printf("vacuous,false\nterm_i,%.10g\nterm_ii,%.10g\ntotal,%.10g\n", b.term_i, b.term_ii, b.total);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pride: private random-feature regression on vertically partitioned data"};
  app.require_subcommand(1);

  std::string config_path, out;
  std::optional<std::uint64_t> seed;
  int jobs = 1;

  auto* gen = app.add_subcommand("generate", "write a confounded synthetic data set to CSV");
  gen->add_option("--config", config_path, "experiment config whose synthetic settings to use");
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--out", out, "output CSV path")->required();

  auto* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override master_seed");
  run->add_option("--out", out, "override output_dir");
  run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  std::vector<double> eps, thetas;
  double delta = 0.05, w2 = 1.0;
  auto* sig = app.add_subcommand("sigma", "noise standard deviation for (epsilon, delta) and column range theta");
  sig->add_option("--epsilon", eps, "privacy levels")->required()->delimiter(',');
  sig->add_option("--theta", thetas, "column range bounds")->required()->delimiter(',');
  sig->add_option("--delta", delta, "failure probability");
  sig->add_option("--w2", w2, "l2 sensitivity of the projection");

  pride::BoundInputs bi;
  auto* bnd = app.add_subcommand("bound", "estimation error bound for given rank, sketch size and noise");
  bnd->add_option("--r", bi.r, "rank")->required();
  bnd->add_option("--tau-k", bi.tau_K, "(K-1) tau_subs")->required();
  bnd->add_option("--sigma", bi.sigma, "max_k sigma_k");
  bnd->add_option("--d-min", bi.d_min, "smallest non-zero singular value")->required();
  bnd->add_option("--beta-norm", bi.beta_star_norm, "norm of the optimum");
  bnd->add_option("--parties", bi.K, "K");
  bnd->add_option("--C", bi.C_const, "absolute constant");
  bnd->add_option("--xi", bi.xi, "failure probability");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate(config_path, seed, out);
    if (*run) return cmd_run(config_path, seed, out, jobs);
    if (*sig) return cmd_sigma(eps, thetas, delta, w2);
    if (*bnd) return cmd_bound(bi);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
