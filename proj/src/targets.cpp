#include "bbvi/targets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bbvi {

namespace {

constexpr double kRidge = 1e-10;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

double prior_neg_log(std::span<const double> z, double v) {
  return norm_sq(z) / (2.0 * v) +
         0.5 * static_cast<double>(z.size()) * std::log(2.0 * std::numbers::pi * v);
}

// Minimizer of 1/2 z'Hz - b'z, ridge-regularized when H is singular.
Vector stationary_point(const DenseMatrix& h, std::span<const double> b) {
  try {
    return solve_spd(h, b);
  } catch (const NumericalError&) {
    return solve_spd(add_scaled_identity(h, kRidge), b);
  }
}

// tr(P C C') = sum_ij (P C)_ij C_ij.
double trace_pcct(const DenseMatrix& pc, const DenseMatrix& c) {
  return dot(pc.entries(), c.entries());
}

}  // namespace

std::string_view form_name(ElboForm form) {
  return form == ElboForm::kEntropy ? "entropy" : "kl";
}

Vector Bijector::to_constrained(std::span<const double> zeta) const {
  Vector z(zeta.begin(), zeta.end());
  if (kind_ == Kind::kExp)
    for (double& v : z) v = std::exp(v);
  return z;
}

Vector Bijector::to_unconstrained(std::span<const double> z) const {
  Vector zeta(z.begin(), z.end());
  if (kind_ == Kind::kExp)
    for (double& v : zeta) {
      if (!(v > 0.0)) throw std::invalid_argument("exp bijector: constrained value must be positive");
      v = std::log(v);
    }
  return zeta;
}

BijectorPull bijector_pull(const Bijector& b, std::span<const double> zeta) {
  BijectorPull out{b.to_constrained(zeta), 0.0, Vector(zeta.size(), 0.0)};
  if (b.kind() == Bijector::Kind::kExp) {
    for (double v : zeta) out.log_jacobian += v;
    std::fill(out.grad_log_jacobian.begin(), out.grad_log_jacobian.end(), 1.0);
  }
  return out;
}

double TargetModel::likelihood_term(std::span<const double> z) const {
  const Vector hz = matvec(hess_, z);
  return 0.5 * dot(z, hz) - dot(b_, z) + c_;
}

Vector TargetModel::likelihood_grad(std::span<const double> z) const {
  Vector g = matvec(hess_, z);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= b_[i];
  return g;
}

double TargetModel::f_kl(std::span<const double> zeta) const {
  require(zeta.size() == dim(), "target: dimension mismatch");
  if (bijector_.kind() == Bijector::Kind::kIdentity) return likelihood_term(zeta);
  const BijectorPull pull = bijector_pull(bijector_, zeta);
  return likelihood_term(pull.z) - pull.log_jacobian;
}

Vector TargetModel::grad_f_kl(std::span<const double> zeta) const {
  require(zeta.size() == dim(), "target: dimension mismatch");
  if (bijector_.kind() == Bijector::Kind::kIdentity) return likelihood_grad(zeta);
  const BijectorPull pull = bijector_pull(bijector_, zeta);
  Vector g = likelihood_grad(pull.z);
  // exp bijector: dz_i/dzeta_i = z_i.
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = g[i] * pull.z[i] - pull.grad_log_jacobian[i];
  return g;
}

double TargetModel::f_h(std::span<const double> zeta) const {
  const Vector z = bijector_.to_constrained(zeta);
  return f_kl(zeta) + prior_neg_log(z, prior_var_);
}

Vector TargetModel::grad_f_h(std::span<const double> zeta) const {
  Vector g = grad_f_kl(zeta);
  const Vector z = bijector_.to_constrained(zeta);
  const bool exp_map = bijector_.kind() == Bijector::Kind::kExp;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += z[i] / prior_var_ * (exp_map ? z[i] : 1.0);
  return g;
}

double TargetModel::f(ElboForm form, std::span<const double> zeta) const {
  return form == ElboForm::kEntropy ? f_h(zeta) : f_kl(zeta);
}

Vector TargetModel::grad_f(ElboForm form, std::span<const double> zeta) const {
  return form == ElboForm::kEntropy ? grad_f_h(zeta) : grad_f_kl(zeta);
}

TargetModel TargetModel::with_bijector(Bijector b) const {
  TargetModel copy = *this;
  copy.bijector_ = b;
  return copy;
}

TargetModel quadratic_target(double n_pseudo, double sigma, double lambda_prior,
                             std::span<const double> mode) {
  require(n_pseudo > 0.0 && sigma > 0.0 && lambda_prior > 0.0,
          "quadratic target: N, sigma and lambda must be positive");
  require(!mode.empty(), "quadratic target: dimension must be >= 1");
  const double a = n_pseudo / (sigma * sigma);
  TargetModel t;
  t.kind_ = TargetModel::Kind::kQuadratic;
  t.hess_ = scale(DenseMatrix::identity(mode.size()), 2.0 * a);
  t.b_.assign(mode.begin(), mode.end());
  for (double& v : t.b_) v *= 2.0 * a;
  t.c_ = a * norm_sq(mode);
  t.prior_var_ = 0.5 * lambda_prior;
  return t;
}

TargetModel linreg_target(const DenseMatrix& x, std::span<const double> y, double sigma,
                          double lambda_prior) {
  require(x.rows() >= 1 && x.cols() >= 1, "linreg target: need N >= 1 and d >= 1");
  require(x.rows() == y.size(), "linreg target: X and y row counts differ");
  require(sigma > 0.0 && lambda_prior > 0.0, "linreg target: sigma and lambda must be positive");
  const double s2 = sigma * sigma;
  const double n = static_cast<double>(x.rows());
  TargetModel t;
  t.kind_ = TargetModel::Kind::kLinearRegression;
  t.hess_ = scale(gram(x), 1.0 / s2);
  t.b_ = matvec_transposed(x, y);
  for (double& v : t.b_) v /= s2;
  t.c_ = norm_sq(y) / (2.0 * s2) + 0.5 * n * std::log(2.0 * std::numbers::pi * s2);
  t.prior_var_ = lambda_prior;
  t.x_ = x;
  t.y_.assign(y.begin(), y.end());
  t.sigma_ = sigma;
  return t;
}

double neg_log_marginal_likelihood(const TargetModel& t) {
  require(t.kind() == TargetModel::Kind::kLinearRegression,
          "marginal likelihood route needs a linear-regression target");
  const DenseMatrix& x = t.design();
  const double s2 = t.noise_sd() * t.noise_sd();
  DenseMatrix k = add_scaled_identity(scale(outer_gram(x), t.prior_variance()), s2);
  LowerTriangular chol;
  try {
    chol = cholesky_spd(k);
  } catch (const NumericalError&) {
    throw NumericalError("singular marginal covariance");
  }
  const Vector alpha = cholesky_solve(chol, t.responses());
  const double n = static_cast<double>(x.rows());
  return 0.5 * dot(t.responses(), alpha) + logabsdet(chol) +
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

ConstantsRecord target_constants(const TargetModel& t, const BaseDistribution& dist,
                                 std::optional<double> entropy_cap) {
  require(t.bijector().kind() == Bijector::Kind::kIdentity,
          "target constants need the identity bijector");
  const std::size_t d = t.dim();
  const DenseMatrix hh = t.hessian_h();
  const EigenExtremes eh = sym_eig_extremes(hh);
  const EigenExtremes ekl = sym_eig_extremes(t.hessian_kl());

  ConstantsRecord c;
  c.l_h = eh.max;
  c.mu_h = eh.min;
  c.l_kl = ekl.max;
  c.mu_kl = std::max(0.0, ekl.min);
  c.stationary_kl = stationary_point(t.hessian_kl(), t.linear_term());
  c.stationary_h = solve_spd(hh, t.linear_term());
  c.f_kl_star = t.f_kl(c.stationary_kl);
  c.f_h_star = t.f_h(c.stationary_h);

  // inf over (m, C): m at the f_H stationary point, C C' = H_H^{-1}.
  const double dd = static_cast<double>(d);
  c.F_star = c.f_h_star + 0.5 * dd + 0.5 * logdet_spd(hh) - dd * entropy_per_dim(dist);
  if (t.kind() == TargetModel::Kind::kLinearRegression && dist.is_gaussian())
    c.F_star = neg_log_marginal_likelihood(t);

  if (entropy_cap) {
    require(*entropy_cap > 0.0, "entropy cap S must be positive");
    c.h_star = -dd * entropy_per_dim(dist) - dd * std::log(*entropy_cap);
  }
  return c;
}

double kl_to_prior(const VariationalParams& params, double v) {
  require(v > 0.0, "prior variance must be positive");
  const DenseMatrix c = build_scale(params);
  const double d = static_cast<double>(params.dim());
  return 0.5 * (frobenius_norm_sq(c) / v + norm_sq(params.m()) / v - d + d * std::log(v) -
                2.0 * logabsdet(c));
}

FlatGradient kl_gradient(const VariationalParams& params, double v) {
  require(v > 0.0, "prior variance must be positive");
  Vector gm = params.m();
  for (double& x : gm) x /= v;
  FlatGradient g = chain_to_flat(params, gm, scale(build_scale(params), 1.0 / v));
  FlatGradient ent = entropy_gradient(params);
  ent *= -1.0;
  g += ent;
  return g;
}

ElboValue exact_elbo(const TargetModel& t, const VariationalParams& params,
                     const BaseDistribution& dist, ElboForm form) {
  if (t.bijector().kind() != Bijector::Kind::kIdentity)
    throw std::invalid_argument("exact ELBO unavailable: target is not quadratic in zeta");
  require(params.dim() == t.dim(), "exact ELBO: dimension mismatch");
  const DenseMatrix c = build_scale(params);
  const DenseMatrix p = form == ElboForm::kEntropy ? t.hessian_h() : t.hessian_kl();
  const DenseMatrix pc = matmul(p, c);
  const auto& m = params.m();

  const double expected_f = t.f(form, m) + 0.5 * trace_pcct(pc, c);
  FlatGradient grad = chain_to_flat(params, t.grad_f(form, m), pc);

  if (form == ElboForm::kEntropy) {
    FlatGradient ent = entropy_gradient(params);
    ent *= -1.0;
    grad += ent;
    return {expected_f - entropy(params, dist), std::move(grad)};
  }
  if (!dist.is_gaussian())
    throw std::invalid_argument("KL-regularized form requires a gaussian base distribution");
  grad += kl_gradient(params, t.prior_variance());
  return {expected_f + kl_to_prior(params, t.prior_variance()), std::move(grad)};
}

OptimalScale optimal_variational(const TargetModel& t) {
  const DenseMatrix hh = t.hessian_h();
  return {solve_spd(hh, t.linear_term()), cholesky_spd(inverse(hh))};
}

}  // namespace bbvi
