#include "bbvi/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace bbvi {

namespace {

constexpr std::uint64_t kModeTag = 0x6d6f6465;      // quadratic mode z*
constexpr std::uint64_t kSgdTag = 0x73676400;       // SGD draws
constexpr std::uint64_t kVarianceTag = 0x76617200;  // variance replicates
constexpr double kDivergenceNorm = 1e12;

std::optional<double> entropy_cap(const Conditioner& phi) {
  if (phi.kind() == Conditioner::Kind::kClippedSoftplus) return phi.cap();
  return std::nullopt;
}

double parse_field(const std::string& cell, std::size_t row, std::size_t col) {
  char* end = nullptr;
  const double x = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size())
    throw std::runtime_error("trace CSV row " + std::to_string(row) + ", column " +
                             std::to_string(col) + ": bad number '" + cell + "'");
  return x;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ExperimentSetup build_setup(const ExperimentConfig& cfg) {
  cfg.validate();
  const BaseDistribution dist = BaseDistribution::gaussian();
  if (cfg.target == TargetKind::kQuadratic) {
    RngStream rng(cfg.seed, stream_id(kModeTag));
    const Vector mode = sample(dist, cfg.d, rng);
    TargetModel t = quadratic_target(static_cast<double>(cfg.n), cfg.sigma, cfg.lambda, mode);
    ConstantsRecord c = target_constants(t, dist, entropy_cap(cfg.conditioner));
    return {std::move(t), dist, std::move(c), "quadratic", cfg.n};
  }
  const Dataset data = cfg.dataset_path ? load_csv_dataset(*cfg.dataset_path, cfg.standardize)
                                        : synthetic_regression(cfg.n, cfg.d, cfg.sigma, cfg.seed);
  TargetModel t = linreg_target(data.x, data.y, cfg.sigma, cfg.lambda);
  ConstantsRecord c = target_constants(t, dist, entropy_cap(cfg.conditioner));
  return {std::move(t), dist, std::move(c), data.name, data.n()};
}

AbcBound configured_bound(const ExperimentConfig& cfg, const ExperimentSetup& setup) {
  return make_bound(cfg.theorem, setup.constants, setup.target.dim(), kurtosis(setup.dist),
                    cfg.m_samples, cfg.family, cfg.conditioner);
}

VariationalParams initial_params(Family family, std::size_t d, const Conditioner& phi) {
  Vector m(d, 0.0);
  switch (family) {
    case Family::kMeanField: return VariationalParams::mean_field(m, Vector(d, phi.inverse(1.0)), phi);
    case Family::kCholesky:
      return VariationalParams::cholesky(m, Vector(d, phi.inverse(1.0)),
                                         Vector(d * (d - 1) / 2, 0.0), phi);
    case Family::kSquareRoot: return VariationalParams::square_root(m, DenseMatrix::identity(d));
  }
  throw std::invalid_argument("unknown family");
}

double effective_stepsize(const ExperimentConfig& cfg, const ExperimentSetup& setup) {
  if (cfg.stepsize) return *cfg.stepsize;
  return 1.0 / setup.constants.l_h;  // B = 1 for every bound here
}

std::vector<VariationalParams> sgd_run(const ExperimentConfig& cfg, const ExperimentSetup& setup) {
  const std::size_t d = setup.target.dim();
  const double step = effective_stepsize(cfg, setup);
  std::vector<VariationalParams> traj;
  traj.reserve(cfg.iterations + 1);
  traj.push_back(initial_params(cfg.family, d, cfg.conditioner));
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    const VariationalParams& cur = traj.back();
    RngStream rng(cfg.seed, stream_id(kSgdTag, t));
    const FlatGradient g = grad_estimate(setup.target, cfg.form, cur, setup.dist, cfg.m_samples, rng);
    const Vector next = axpy(-step, g.values, cur.flat());
    const double norm = std::sqrt(norm_sq(next));
    if (!(norm <= kDivergenceNorm))
      throw std::runtime_error("SGD diverged at iteration " + std::to_string(t + 1) +
                               ": ||lambda|| = " + format_double(norm) + " (stepsize " +
                               format_double(step) + ")");
    traj.push_back(VariationalParams::from_flat(cfg.family, d, next, cfg.conditioner));
  }
  return traj;
}

std::uint64_t variance_seed(std::uint64_t seed, std::size_t t) {
  return stream_id(seed, kVarianceTag, t);
}

std::vector<TrajectoryRecord> trace_bounds(const ExperimentConfig& cfg, const ExperimentSetup& setup,
                                           const std::vector<VariationalParams>& trajectory) {
  if (trajectory.size() != cfg.iterations + 1)
    throw std::invalid_argument("trace_bounds: trajectory length does not match T + 1");
  const AbcBound bound = configured_bound(cfg, setup);
  std::vector<TrajectoryRecord> out;
  for (std::size_t t = 0; t <= cfg.iterations; t += cfg.eval_every) {
    const VariationalParams& p = trajectory[t];
    const ElboValue ev = exact_elbo(setup.target, p, setup.dist, cfg.form);
    TrajectoryRecord r;
    r.t = t;
    r.f_gap = ev.value - setup.constants.F_star;
    r.grad_f_sqnorm = ev.gradient.norm_sq();
    const VarianceEstimate v = empirical_sqnorm(setup.target, cfg.form, p, setup.dist, cfg.m_samples,
                                                cfg.replications, variance_seed(cfg.seed, t));
    r.gvar_emp = v.second_moment;
    r.gvar_se = v.std_error;
    const AbcTerms terms = abc_terms(bound, r.f_gap, r.grad_f_sqnorm);
    r.bound_a_term = terms.a_term;
    r.bound_b_term = terms.b_term;
    r.bound_c_const = terms.c_term;
    r.bound_rhs = terms.total();
    r.kl_qp = kl_to_prior(p, setup.target.prior_variance());
    out.push_back(r);
  }
  return out;
}

void write_trace_csv(const std::vector<TrajectoryRecord>& records, std::ostream& out) {
  out << kTraceHeader << '\n';
  for (const auto& r : records) {
    out << r.t << ',' << format_double(r.f_gap) << ',' << format_double(r.grad_f_sqnorm) << ','
        << format_double(r.gvar_emp) << ',' << format_double(r.gvar_se) << ','
        << format_double(r.bound_rhs) << ',' << format_double(r.bound_a_term) << ','
        << format_double(r.bound_b_term) << ',' << format_double(r.bound_c_const) << ','
        << format_double(r.kl_qp) << '\n';
  }
}

std::vector<TrajectoryRecord> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader)
    throw std::runtime_error("trace CSV: unexpected header");
  std::vector<TrajectoryRecord> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 10)
      throw std::runtime_error("trace CSV row " + std::to_string(row) + ": expected 10 fields");
    TrajectoryRecord r;
    r.t = static_cast<std::size_t>(parse_field(cells[0], row, 1));
    double* fields[] = {&r.f_gap,     &r.grad_f_sqnorm, &r.gvar_emp,     &r.gvar_se,      &r.bound_rhs,
                        &r.bound_a_term, &r.bound_b_term, &r.bound_c_const, &r.kl_qp};
    for (std::size_t j = 0; j < 9; ++j) *fields[j] = parse_field(cells[j + 1], row, j + 2);
    out.push_back(r);
  }
  return out;
}

ConstantsRow cmd_constants(const ExperimentConfig& cfg) {
  const ExperimentSetup setup = build_setup(cfg);
  const ConstantsRecord& c = setup.constants;
  const std::size_t d = setup.target.dim();
  const AbcBound b = abc_entropy_form(c, d, kurtosis(setup.dist), cfg.m_samples, cfg.family,
                                      cfg.conditioner);
  ConstantsRow row;
  row.dataset = setup.dataset_name;
  row.d = d;
  row.n = setup.n_obs;
  row.l_h = c.l_h;
  row.mu_kl = c.mu_kl;
  row.kappa_cond = c.l_h / c.mu_kl;
  row.statdist_sq = norm_sq(subtract(c.stationary_kl, c.stationary_h));
  row.a = b.a;
  row.c = b.c;
  return row;
}

ConstantsRow constants_from_values(std::string name, std::size_t d, std::size_t n, double l_h,
                                   double mu_kl, double statdist_sq, double fstar_gap,
                                   std::size_t m_samples, Family family) {
  if (!(l_h > 0.0 && mu_kl > 0.0)) throw std::invalid_argument("constants: L_H and mu_KL must be positive");
  if (!(statdist_sq >= 0.0)) throw std::invalid_argument("constants: statdist_sq must be >= 0");
  ConstantsRecord c;
  c.l_h = l_h;
  c.mu_kl = mu_kl;
  c.stationary_h = Vector(d, 0.0);
  c.stationary_kl = Vector(d, 0.0);
  c.stationary_kl[0] = std::sqrt(statdist_sq);
  c.F_star = fstar_gap;
  c.f_kl_star = 0.0;
  const AbcBound b = abc_entropy_form(c, d, kurtosis(BaseDistribution::gaussian()), m_samples, family);
  return {std::move(name), d, n, l_h, mu_kl, l_h / mu_kl, statdist_sq, b.a, b.c};
}

void write_constants_csv(const std::vector<ConstantsRow>& rows, std::ostream& out) {
  out << kConstantsHeader << '\n';
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.d << ',' << r.n << ',' << format_double(r.l_h) << ','
        << format_double(r.mu_kl) << ',' << format_double(r.kappa_cond) << ','
        << format_double(r.statdist_sq) << ',' << format_double(r.a) << ',' << format_double(r.c)
        << '\n';
  }
}

std::vector<ParamComparisonRecord> cmd_compare_parameterizations(const ExperimentConfig& cfg) {
  ExperimentConfig ref = cfg;
  ref.family = Family::kCholesky;
  ref.conditioner = Conditioner::softplus();
  if (ref.theorem == BoundTheorem::kBoundedEntropy) ref.theorem = BoundTheorem::kEntropy;
  const ExperimentSetup setup = build_setup(ref);
  const auto traj = sgd_run(ref, setup);

  std::vector<ParamComparisonRecord> out;
  for (std::size_t t = 0; t <= ref.iterations; t += ref.eval_every) {
    const VariationalParams& p = traj[t];
    const LowerTriangular c = LowerTriangular::from_dense(build_scale(p));
    const MatchedParams softplus = match_parameterizations(p.m(), c, Conditioner::softplus());
    const MatchedParams linear = match_parameterizations(p.m(), c, Conditioner::identity());
    const std::uint64_t seed = variance_seed(ref.seed, t);
    auto gvar = [&](const VariationalParams& q) {
      return empirical_sqnorm(setup.target, ref.form, q, setup.dist, ref.m_samples, ref.replications,
                              seed);
    };
    out.push_back({t, gvar(softplus.square_root), gvar(linear.cholesky), gvar(softplus.cholesky),
                   gvar(softplus.mean_field)});
  }
  return out;
}

void write_comparison_csv(const std::vector<ParamComparisonRecord>& records, std::ostream& out) {
  out << "t,gvar_square_root,se_square_root,gvar_linear_cholesky,se_linear_cholesky,"
         "gvar_softplus_cholesky,se_softplus_cholesky,gvar_mean_field,se_mean_field\n";
  for (const auto& r : records) {
    out << r.t;
    for (const VarianceEstimate* v :
         {&r.square_root, &r.linear_cholesky, &r.softplus_cholesky, &r.mean_field})
      out << ',' << format_double(v->second_moment) << ',' << format_double(v->std_error);
    out << '\n';
  }
}

}  // namespace bbvi
