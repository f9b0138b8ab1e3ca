// bbvi: gradient-variance experiments for black-box variational inference.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "bbvi/checks.hpp"
#include "bbvi/experiment.hpp"

namespace {

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool needs_config) {
  auto* cfg = cmd->add_option("--config", o.config, "experiment config file (key = value)");
  if (needs_config) cfg->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output path (default: stdout)");
  cmd->add_option("--seed", o.seed, "root seed, overrides the config");
  cmd->add_flag("--quiet", o.quiet, "suppress progress messages");
}

bbvi::ExperimentConfig load(const CommonOptions& o) {
  bbvi::ExperimentConfig cfg = bbvi::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

// Writes through `emit` to --out or stdout.
template <class Fn>
void with_output(const CommonOptions& o, Fn emit) {
  if (o.out.empty()) {
    emit(std::cout);
    return;
  }
  std::ofstream f(o.out);
  if (!f) throw std::runtime_error("cannot open output file '" + o.out + "'");
  emit(f);
  if (!f) throw std::runtime_error("failed writing '" + o.out + "'");
}

int cmd_run(const CommonOptions& o) {
  const bbvi::ExperimentConfig cfg = load(o);
  const bbvi::ExperimentSetup setup = bbvi::build_setup(cfg);
  const bbvi::AbcBound bound = bbvi::configured_bound(cfg, setup);
  if (!o.quiet)
    std::cerr << "target " << setup.dataset_name << ", d=" << setup.target.dim()
              << ", stepsize " << bbvi::format_double(bbvi::effective_stepsize(cfg, setup)) << "\n"
              << bound.provenance << ": A=" << bbvi::format_double(bound.a)
              << " C=" << bbvi::format_double(bound.c) << "\n";
  const auto traj = bbvi::sgd_run(cfg, setup);
  const auto records = bbvi::trace_bounds(cfg, setup, traj);
  with_output(o, [&](std::ostream& os) { bbvi::write_trace_csv(records, os); });
  if (!o.quiet) {
    std::size_t dominated = 0;
    for (const auto& r : records)
      if (r.gvar_emp <= r.bound_rhs + 3.0 * r.gvar_se) ++dominated;
    std::cerr << dominated << "/" << records.size()
              << " logged iterates satisfy gvar <= bound + 3 se\n";
  }
  return 0;
}

struct ConstantsOnly {
  std::optional<double> l_h, mu_kl;
  std::size_t d = 0, n = 0, m = 10;
  double statdist_sq = 0.0, fstar_gap = 0.0;
  std::string name = "manual";
};

int cmd_constants(const CommonOptions& o, const ConstantsOnly& c) {
  bbvi::ConstantsRow row;
  if (c.l_h || c.mu_kl) {
    if (!c.l_h || !c.mu_kl || c.d == 0)
      throw std::invalid_argument("constants-only mode needs --L-H, --mu-KL and --d");
    row = bbvi::constants_from_values(c.name, c.d, c.n, *c.l_h, *c.mu_kl, c.statdist_sq,
                                      c.fstar_gap, c.m);
  } else {
    if (o.config.empty()) throw std::invalid_argument("constants needs --config or --L-H/--mu-KL");
    row = bbvi::cmd_constants(load(o));
  }
  with_output(o, [&](std::ostream& os) { bbvi::write_constants_csv({row}, os); });
  return 0;
}

int cmd_compare(const CommonOptions& o) {
  const auto records = bbvi::cmd_compare_parameterizations(load(o));
  with_output(o, [&](std::ostream& os) { bbvi::write_comparison_csv(records, os); });
  if (!o.quiet) {
    std::size_t ordered = 0;
    for (const auto& r : records)
      if (r.square_root.second_moment >= r.linear_cholesky.second_moment &&
          r.linear_cholesky.second_moment >= r.softplus_cholesky.second_moment)
        ++ordered;
    std::cerr << ordered << "/" << records.size()
              << " iterates ordered square-root >= linear cholesky >= softplus cholesky\n";
  }
  return 0;
}

int cmd_verify(const CommonOptions& o) {
  const auto results = bbvi::run_verify_suite(o.seed.value_or(20230501));
  bool all = true;
  for (const auto& r : results) {
    all = all && r.passed;
    if (!o.quiet)
      std::cerr << (r.passed ? "PASS " : "FAIL ") << r.name << " [" << r.tolerance << "] "
                << r.detail << "\n";
  }
  with_output(o, [&](std::ostream& os) { bbvi::write_report_json(results, os); });
  return all ? 0 : 1;
}

int cmd_gen_data(const CommonOptions& o, std::size_t n, std::size_t d, double noise) {
  const auto data = bbvi::synthetic_regression(n, d, noise, o.seed.value_or(1));
  with_output(o, [&](std::ostream& os) { bbvi::write_csv_dataset(data, os); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-variance bounds for black-box variational inference"};
  app.require_subcommand(1);

  CommonOptions run_opts, const_opts, cmp_opts, verify_opts, gen_opts;

  auto* run = app.add_subcommand("run", "SGD trajectory with variance and bound trace (CSV)");
  add_common(run, run_opts, true);

  auto* constants = app.add_subcommand("constants", "bound constants table row (CSV)");
  add_common(constants, const_opts, false);
  ConstantsOnly co;
  constants->add_option("--L-H", co.l_h, "smoothness constant of f_H (constants-only mode)");
  constants->add_option("--mu-KL", co.mu_kl, "quadratic-growth constant of f_KL");
  constants->add_option("--d", co.d, "dimension");
  constants->add_option("--N", co.n, "number of observations");
  constants->add_option("--M", co.m, "Monte Carlo samples per gradient");
  constants->add_option("--statdist-sq", co.statdist_sq, "||zeta_KL - zeta_H||^2");
  constants->add_option("--fstar-gap", co.fstar_gap, "F* - f*_KL");
  constants->add_option("--name", co.name, "dataset label");

  auto* compare = app.add_subcommand("compare-params", "per-family gradient variance at matched (m, C)");
  add_common(compare, cmp_opts, true);

  auto* verify = app.add_subcommand("verify", "run the property suite; JSON report");
  add_common(verify, verify_opts, false);

  auto* gen = app.add_subcommand("gen-data", "synthetic regression CSV");
  add_common(gen, gen_opts, false);
  std::size_t gen_n = 200, gen_d = 10;
  double gen_noise = 0.5;
  gen->add_option("--n", gen_n, "rows")->check(CLI::PositiveNumber);
  gen->add_option("--d", gen_d, "features")->check(CLI::PositiveNumber);
  gen->add_option("--noise", gen_noise, "noise standard deviation")->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_opts);
    if (*constants) return cmd_constants(const_opts, co);
    if (*compare) return cmd_compare(cmp_opts);
    if (*verify) return cmd_verify(verify_opts);
    if (*gen) return cmd_gen_data(gen_opts, gen_n, gen_d, gen_noise);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
