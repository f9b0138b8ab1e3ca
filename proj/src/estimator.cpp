#include "bbvi/estimator.hpp"

#include <cmath>
#include <stdexcept>

namespace bbvi {

namespace {

// grad h(lambda): -grad H(q) for the entropy form, grad KL(q || p) otherwise.
FlatGradient regularizer_gradient(const TargetModel& t, ElboForm form,
                                  const VariationalParams& params, const BaseDistribution& dist) {
  if (form == ElboForm::kEntropy) {
    FlatGradient ent = entropy_gradient(params);
    ent *= -1.0;
    return ent;
  }
  if (!dist.is_gaussian())
    throw std::invalid_argument("KL-regularized form requires a gaussian base distribution");
  return kl_gradient(params, t.prior_variance());
}

FlatGradient sample_with_regularizer(const TargetModel& t, ElboForm form,
                                     const VariationalParams& params, std::span<const double> u,
                                     const FlatGradient& reg) {
  FlatGradient g = pullback(params, u, t.grad_f(form, transform(params, u)));
  g += reg;
  return g;
}

}  // namespace

FlatGradient grad_sample(const TargetModel& t, ElboForm form, const VariationalParams& params,
                         const BaseDistribution& dist, std::span<const double> u) {
  if (params.dim() != t.dim() || u.size() != t.dim())
    throw std::invalid_argument("grad_sample: dimension mismatch");
  return sample_with_regularizer(t, form, params, u, regularizer_gradient(t, form, params, dist));
}

FlatGradient grad_estimate(const TargetModel& t, ElboForm form, const VariationalParams& params,
                           const BaseDistribution& dist, std::size_t m_samples, RngStream& rng) {
  if (m_samples == 0) throw std::invalid_argument("grad_estimate: M must be >= 1");
  if (params.dim() != t.dim()) throw std::invalid_argument("grad_estimate: dimension mismatch");
  const FlatGradient reg = regularizer_gradient(t, form, params, dist);
  FlatGradient acc{Vector(params.param_count(), 0.0)};
  for (std::size_t k = 0; k < m_samples; ++k) {
    const Vector u = sample(dist, params.dim(), rng);
    acc += sample_with_regularizer(t, form, params, u, reg);
  }
  acc *= 1.0 / static_cast<double>(m_samples);
  return acc;
}

VarianceEstimate empirical_sqnorm(const TargetModel& t, ElboForm form,
                                  const VariationalParams& params, const BaseDistribution& dist,
                                  std::size_t m_samples, std::size_t replications,
                                  std::uint64_t root_seed) {
  if (replications < 2) throw std::invalid_argument("empirical_sqnorm: R must be >= 2");
  // Welford accumulation in replicate order.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t r = 0; r < replications; ++r) {
    RngStream rng(root_seed, r);
    const double x = grad_estimate(t, form, params, dist, m_samples, rng).norm_sq();
    const double delta = x - mean;
    mean += delta / static_cast<double>(r + 1);
    m2 += delta * (x - mean);
  }
  const double n = static_cast<double>(replications);
  const double sd = std::sqrt(m2 / (n - 1.0));
  return {mean, sd / std::sqrt(n), replications, m_samples};
}

double expected_pullback_sqnorm(const TargetModel& t, ElboForm form,
                                const VariationalParams& params, const BaseDistribution& dist) {
  if (t.bijector().kind() != Bijector::Kind::kIdentity)
    throw std::invalid_argument("expected pullback norm needs a quadratic target in zeta");
  const std::size_t d = params.dim();
  const double kappa = kurtosis(dist);
  const DenseMatrix p = form == ElboForm::kEntropy ? t.hessian_h() : t.hessian_kl();
  const DenseMatrix b = matmul(p, build_scale(params));  // g_f(u) = a + B u
  const Vector a = t.grad_f(form, params.m());

  Vector row_sq(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) row_sq[i] = norm_sq(b.row(i));

  // E w_i g_i^2 for w_i = sum_k c_ik u_k^2.
  auto weighted = [&](std::size_t i, std::size_t k) {
    return a[i] * a[i] + row_sq[i] + (kappa - 1.0) * b(i, k) * b(i, k);
  };

  double total = norm_sq(a) + frobenius_norm_sq(b);
  for (std::size_t i = 0; i < d; ++i) {
    switch (params.family()) {
      case Family::kMeanField: {
        const double dphi = params.conditioner()(params.s()[i]).derivative;
        total += dphi * dphi * weighted(i, i);
        break;
      }
      case Family::kCholesky: {
        const double dphi = params.conditioner()(params.s()[i]).derivative;
        for (std::size_t k = 0; k < i; ++k) total += weighted(i, k);
        total += dphi * dphi * weighted(i, i);
        break;
      }
      case Family::kSquareRoot:
        for (std::size_t k = 0; k < d; ++k) total += weighted(i, k);
        break;
    }
  }
  return total;
}

double expected_sqnorm(const TargetModel& t, ElboForm form, const VariationalParams& params,
                       const BaseDistribution& dist, std::size_t m_samples) {
  if (m_samples == 0) throw std::invalid_argument("expected_sqnorm: M must be >= 1");
  const DenseMatrix p = form == ElboForm::kEntropy ? t.hessian_h() : t.hessian_kl();
  const FlatGradient mean_path =
      chain_to_flat(params, t.grad_f(form, params.m()), matmul(p, build_scale(params)));
  const double trace_var = expected_pullback_sqnorm(t, form, params, dist) - mean_path.norm_sq();
  const double grad_sq = exact_elbo(t, params, dist, form).gradient.norm_sq();
  return trace_var / static_cast<double>(m_samples) + grad_sq;
}

}  // namespace bbvi
