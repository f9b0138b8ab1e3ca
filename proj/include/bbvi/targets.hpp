#pragma once

// Target models f_H / f_KL with analytic gradients and the constants that
// feed the gradient-variance bounds.
//
// Both provided targets have a gaussian likelihood term in z:
//   -log l(x | z) = 1/2 z' H z - b' z + c
// and an isotropic gaussian prior N(0, v I) carrying its full normalizer,
// so that  E f_H - H(q) == E f_KL + KL(q || p)  for a gaussian base.

#include <optional>
#include <span>
#include <string_view>

#include "bbvi/basedist.hpp"
#include "bbvi/linalg.hpp"
#include "bbvi/reparam.hpp"

namespace bbvi {

enum class ElboForm { kEntropy, kKl };

std::string_view form_name(ElboForm form);

class Bijector {
 public:
  enum class Kind { kIdentity, kExp };

  static Bijector identity() { return Bijector(Kind::kIdentity); }
  static Bijector exp() { return Bijector(Kind::kExp); }

  Kind kind() const { return kind_; }

  Vector to_constrained(std::span<const double> zeta) const;  // psi^{-1}(zeta)
  Vector to_unconstrained(std::span<const double> z) const;   // psi(z)

 private:
  explicit Bijector(Kind kind) : kind_(kind) {}
  Kind kind_;
};

struct BijectorPull {
  Vector z;               // psi^{-1}(zeta)
  double log_jacobian;    // log |J_{psi^{-1}}(zeta)|
  Vector grad_log_jacobian;
};

BijectorPull bijector_pull(const Bijector& b, std::span<const double> zeta);

class TargetModel {
 public:
  enum class Kind { kQuadratic, kLinearRegression };

  Kind kind() const { return kind_; }
  std::size_t dim() const { return b_.size(); }
  const Bijector& bijector() const { return bijector_; }
  double prior_variance() const { return prior_var_; }

  /// Hessians in zeta-space (identity bijector).
  const DenseMatrix& hessian_kl() const { return hess_; }
  DenseMatrix hessian_h() const { return add_scaled_identity(hess_, 1.0 / prior_var_); }
  const Vector& linear_term() const { return b_; }

  double f_kl(std::span<const double> zeta) const;
  Vector grad_f_kl(std::span<const double> zeta) const;
  double f_h(std::span<const double> zeta) const;
  Vector grad_f_h(std::span<const double> zeta) const;

  double f(ElboForm form, std::span<const double> zeta) const;
  Vector grad_f(ElboForm form, std::span<const double> zeta) const;

  /// Returns a copy that evaluates through the given bijector.
  TargetModel with_bijector(Bijector b) const;

  /// Regression data retained for the marginal-likelihood route.
  const DenseMatrix& design() const { return x_; }
  const Vector& responses() const { return y_; }
  double noise_sd() const { return sigma_; }

 private:
  friend TargetModel quadratic_target(double, double, double, std::span<const double>);
  friend TargetModel linreg_target(const DenseMatrix&, std::span<const double>, double, double);

  TargetModel() = default;

  double likelihood_term(std::span<const double> z) const;
  Vector likelihood_grad(std::span<const double> z) const;

  Kind kind_ = Kind::kQuadratic;
  DenseMatrix hess_;
  Vector b_;
  double c_ = 0.0;
  double prior_var_ = 1.0;
  Bijector bijector_ = Bijector::identity();
  DenseMatrix x_;
  Vector y_;
  double sigma_ = 0.0;
};

/// f_KL(z) = a ||z - z*||^2 with a = N / sigma^2; the prior
/// log p(z) = -||z||^2 / lambda - (d/2) log(pi lambda).
TargetModel quadratic_target(double n_pseudo, double sigma, double lambda_prior,
                             std::span<const double> mode);

/// y ~ N(Xw, sigma^2 I), w ~ N(0, lambda I), both with full normalizers.
TargetModel linreg_target(const DenseMatrix& x, std::span<const double> y, double sigma,
                          double lambda_prior);

struct ConstantsRecord {
  double l_h = 0.0;
  double mu_h = 0.0;
  double l_kl = 0.0;
  double mu_kl = 0.0;
  Vector stationary_h;
  Vector stationary_kl;
  double f_h_star = 0.0;
  double f_kl_star = 0.0;
  double F_star = 0.0;
  std::optional<double> h_star;  // entropy floor, clipped conditioner only
};

/// Curvature constants, stationary points, infima, F* (entropy form over the
/// full-rank family) and, when `entropy_cap` is given, h* = -d H(phi) - d log S.
ConstantsRecord target_constants(const TargetModel& t, const BaseDistribution& dist,
                                 std::optional<double> entropy_cap = std::nullopt);

/// -log p(y) for the linear-regression target through the N x N covariance
/// sigma^2 I + lambda X X'.
double neg_log_marginal_likelihood(const TargetModel& t);

struct ElboValue {
  double value;
  FlatGradient gradient;
};

/// Closed-form negative ELBO and its gradient for the quadratic targets.
/// Uses only the first two moments of the base. The KL form needs a gaussian
/// base; a non-identity bijector makes the closed form unavailable.
ElboValue exact_elbo(const TargetModel& t, const VariationalParams& params,
                     const BaseDistribution& dist, ElboForm form = ElboForm::kEntropy);

/// KL(q || N(0, v I)) for a gaussian q with scale C(params).
double kl_to_prior(const VariationalParams& params, double prior_variance);
FlatGradient kl_gradient(const VariationalParams& params, double prior_variance);

/// The optimum of the entropy-form objective over the full-rank family:
/// m = stationary point of f_H, C = chol(H_H^{-1}).
struct OptimalScale {
  Vector m;
  LowerTriangular c;
};
OptimalScale optimal_variational(const TargetModel& t);

}  // namespace bbvi
