#pragma once

// Property suite behind `bbvi verify`. Every check is deterministic given
// its seed and reports the tolerance it applied.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bbvi/reparam.hpp"

namespace bbvi {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string tolerance;
  std::string detail;
};

using SqnormIdentity = std::function<double(const VariationalParams&, std::span<const double>,
                                            std::span<const double>)>;

// linalg
CheckResult check_cholesky_reconstruction(std::uint64_t seed);
CheckResult check_eigen_extremes(std::uint64_t seed);
CheckResult check_logabsdet_consistency(std::uint64_t seed);

// basedist
CheckResult check_base_moments(const BaseDistribution& dist, std::size_t n, std::uint64_t seed);
CheckResult check_rng_determinism(std::uint64_t seed);

// reparam
/// `identity` defaults to the library's closed form; tests inject mutants.
CheckResult check_norm_identity(std::uint64_t seed, std::size_t trials = 1000,
                                const SqnormIdentity& identity = pullback_sqnorm_identity);
CheckResult check_family_ordering(std::uint64_t seed, std::size_t trials = 1000);
CheckResult check_mean_field_norm_bound(std::uint64_t seed, std::size_t trials = 1000);
CheckResult check_expectation_identities(const BaseDistribution& dist, std::size_t n,
                                         std::uint64_t seed);
CheckResult check_mean_field_expectation_bound(const BaseDistribution& dist, std::size_t n,
                                               std::uint64_t seed);

// targets
CheckResult check_entropy_kl_agreement(std::uint64_t seed);
CheckResult check_stationary_points(std::uint64_t seed);
CheckResult check_quadratic_growth(std::uint64_t seed);
CheckResult check_smoothness(std::uint64_t seed);
CheckResult check_fstar_validity(std::uint64_t seed);
CheckResult check_fstar_marginal_likelihood(std::uint64_t seed);

// estimator
CheckResult check_unbiasedness(std::uint64_t seed, std::size_t draws);
CheckResult check_variance_determinism(std::uint64_t seed);
CheckResult check_variance_decomposition(std::uint64_t seed);

// bounds
CheckResult check_cdim_monotone();
CheckResult check_fertility_constant();
CheckResult check_fstar_split(std::uint64_t seed);
CheckResult check_upper_bound_dominance(std::uint64_t seed);
CheckResult check_lower_bound(std::uint64_t seed);

// experiment
CheckResult check_trace_roundtrip(std::uint64_t seed);

std::vector<CheckResult> run_verify_suite(std::uint64_t seed);

/// {"passed": bool, "checks": [{name, passed, tolerance, detail}, ...]}
void write_report_json(const std::vector<CheckResult>& results, std::ostream& out);

}  // namespace bbvi
