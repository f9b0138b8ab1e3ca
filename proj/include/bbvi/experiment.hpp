#pragma once

// SGD driver and CSV emission for the bound-versus-variance experiments.

#include <iosfwd>
#include <string>
#include <vector>

#include "bbvi/bounds.hpp"
#include "bbvi/config.hpp"
#include "bbvi/dataset.hpp"
#include "bbvi/estimator.hpp"

namespace bbvi {

/// Everything derived from a config before optimization starts.
struct ExperimentSetup {
  TargetModel target;
  BaseDistribution dist;
  ConstantsRecord constants;
  std::string dataset_name;
  std::size_t n_obs;
};

ExperimentSetup build_setup(const ExperimentConfig& cfg);

/// The configured theorem's bound for the configured family.
AbcBound configured_bound(const ExperimentConfig& cfg, const ExperimentSetup& setup);

/// m = 0 and C = I, with the diagonal pre-parameters at phi^{-1}(1).
VariationalParams initial_params(Family family, std::size_t d, const Conditioner& phi);

/// 1 / (B L_H) unless the config fixes a stepsize.
double effective_stepsize(const ExperimentConfig& cfg, const ExperimentSetup& setup);

/// Fixed-stepsize SGD; returns lambda_0 .. lambda_T. Throws std::runtime_error
/// when ||lambda|| exceeds 1e12.
std::vector<VariationalParams> sgd_run(const ExperimentConfig& cfg, const ExperimentSetup& setup);

struct TrajectoryRecord {
  std::size_t t = 0;
  double f_gap = 0.0;
  double grad_f_sqnorm = 0.0;
  double gvar_emp = 0.0;
  double gvar_se = 0.0;
  double bound_rhs = 0.0;
  double bound_a_term = 0.0;
  double bound_b_term = 0.0;
  double bound_c_const = 0.0;
  double kl_qp = 0.0;

  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

/// Root seed for the variance replicates at logged iterate t.
std::uint64_t variance_seed(std::uint64_t seed, std::size_t t);

/// Records at t = 0, eval_every, 2 eval_every, ... <= T.
std::vector<TrajectoryRecord> trace_bounds(const ExperimentConfig& cfg, const ExperimentSetup& setup,
                                           const std::vector<VariationalParams>& trajectory);

inline constexpr const char* kTraceHeader =
    "t,F_gap,grad_F_sqnorm,gvar_emp,gvar_se,bound_rhs,bound_A_term,bound_B_term,bound_C_const,kl_qp";
void write_trace_csv(const std::vector<TrajectoryRecord>& records, std::ostream& out);
std::vector<TrajectoryRecord> read_trace_csv(std::istream& in);

struct ConstantsRow {
  std::string dataset;
  std::size_t d = 0;
  std::size_t n = 0;
  double l_h = 0.0;
  double mu_kl = 0.0;
  double kappa_cond = 0.0;
  double statdist_sq = 0.0;
  double a = 0.0;
  double c = 0.0;
};

ConstantsRow cmd_constants(const ExperimentConfig& cfg);

/// Table row from published constants instead of data. `fstar_gap` is
/// F* - f*_KL.
ConstantsRow constants_from_values(std::string name, std::size_t d, std::size_t n, double l_h,
                                   double mu_kl, double statdist_sq, double fstar_gap,
                                   std::size_t m_samples, Family family = Family::kCholesky);

inline constexpr const char* kConstantsHeader = "dataset,d,N,L_H,mu_KL,kappa_cond,statdist_sq,A,C";
void write_constants_csv(const std::vector<ConstantsRow>& rows, std::ostream& out);

struct ParamComparisonRecord {
  std::size_t t = 0;
  VarianceEstimate square_root;
  VarianceEstimate linear_cholesky;
  VarianceEstimate softplus_cholesky;
  VarianceEstimate mean_field;  // diag(C) only, a different distribution
};

/// Softplus-Cholesky reference trajectory; each logged iterate is re-expressed
/// in every family and all families share the same base draws.
std::vector<ParamComparisonRecord> cmd_compare_parameterizations(const ExperimentConfig& cfg);

void write_comparison_csv(const std::vector<ParamComparisonRecord>& records, std::ostream& out);

/// %.17g formatting, enough to round-trip any double.
std::string format_double(double x);

}  // namespace bbvi
