#pragma once

// Reparameterization gradient estimators of the negative ELBO and their
// empirical second moment E||g_M||^2.

#include <cstdint>
#include <span>

#include "bbvi/basedist.hpp"
#include "bbvi/reparam.hpp"
#include "bbvi/targets.hpp"

namespace bbvi {

/// One draw: grad_lambda f(t(u)) + grad h(lambda), where h is -H(q) for the
/// entropy form and KL(q || p) for the KL form.
FlatGradient grad_sample(const TargetModel& t, ElboForm form, const VariationalParams& params,
                         const BaseDistribution& dist, std::span<const double> u);

/// Mean of `m_samples` draws of grad_sample, consuming draws from `rng`.
FlatGradient grad_estimate(const TargetModel& t, ElboForm form, const VariationalParams& params,
                           const BaseDistribution& dist, std::size_t m_samples, RngStream& rng);

struct VarianceEstimate {
  double second_moment = 0.0;  // mean of ||g_M||^2 over replicates
  double std_error = 0.0;      // sample std of ||g_M||^2 / sqrt(replications)
  std::size_t replications = 0;
  std::size_t m_samples = 0;

  friend bool operator==(const VarianceEstimate&, const VarianceEstimate&) = default;
};

/// Replicate r draws from RngStream(root_seed, r), so the result depends only
/// on (root_seed, inputs).
VarianceEstimate empirical_sqnorm(const TargetModel& t, ElboForm form,
                                  const VariationalParams& params, const BaseDistribution& dist,
                                  std::size_t m_samples, std::size_t replications,
                                  std::uint64_t root_seed);

/// Exact E||grad_lambda f(t(u))||^2 for the quadratic targets, using the
/// diagonal-matrix norm identity and moments of u up to order four.
double expected_pullback_sqnorm(const TargetModel& t, ElboForm form,
                                const VariationalParams& params, const BaseDistribution& dist);

/// Exact E||g_M||^2 = (E||grad_lambda f||^2 - ||E grad_lambda f||^2) / M + ||grad F||^2.
double expected_sqnorm(const TargetModel& t, ElboForm form, const VariationalParams& params,
                       const BaseDistribution& dist, std::size_t m_samples);

}  // namespace bbvi
