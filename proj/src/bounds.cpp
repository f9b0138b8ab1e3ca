#include "bbvi/bounds.hpp"

#include <cmath>

namespace bbvi {

namespace {

constexpr double kGapClamp = -1e-9;

void require_lipschitz(const Conditioner& phi, Family family) {
  if (family != Family::kSquareRoot && !phi.one_lipschitz())
    throw BoundNotApplicable("bound not applicable: conditioner not 1-Lipschitz");
}

std::string describe(std::string_view theorem, std::size_t d, double kappa, std::size_t m,
                     Family family) {
  return std::string(theorem) + " bound, " + std::string(family_name(family)) +
         ", d=" + std::to_string(d) + ", kappa=" + std::to_string(kappa) +
         ", M=" + std::to_string(m);
}

void require_inputs(std::size_t d, double kappa, std::size_t m) {
  if (d < 1) throw std::invalid_argument("bound: d must be >= 1");
  if (!(kappa >= 1.0)) throw std::invalid_argument("bound: kurtosis must be >= 1");
  if (m < 1) throw std::invalid_argument("bound: M must be >= 1");
}

}  // namespace

std::string_view theorem_name(BoundTheorem th) {
  switch (th) {
    case BoundTheorem::kEntropy: return "entropy";
    case BoundTheorem::kKl: return "kl";
    case BoundTheorem::kBoundedEntropy: return "bounded_entropy";
  }
  return "unknown";
}

double c_dim(std::size_t d, double kappa, Family family, const Conditioner& phi) {
  require_inputs(d, kappa, 1);
  require_lipschitz(phi, family);
  const double dd = static_cast<double>(d);
  if (family == Family::kMeanField) return 2.0 * kappa * std::sqrt(dd) + 1.0;
  return dd + kappa;
}

AbcBound abc_entropy_form(const ConstantsRecord& c, std::size_t d, double kappa, std::size_t m,
                          Family family, const Conditioner& phi) {
  require_inputs(d, kappa, m);
  if (c.stationary_h.size() != d || c.stationary_kl.size() != d)
    throw std::invalid_argument("entropy-form bound: constants record is missing stationary points");
  const double cd = c_dim(d, kappa, family, phi);
  const double mm = static_cast<double>(m);
  AbcBound b;
  b.theorem = BoundTheorem::kEntropy;
  b.a = 2.0 * c.l_h * c.l_h * cd / (c.mu_kl * mm);
  const double statdist = norm_sq(subtract(c.stationary_kl, c.stationary_h));
  b.c = 2.0 * c.l_h * c.l_h / mm * cd * statdist + 2.0 * b.a * (c.F_star - c.f_kl_star);
  b.provenance = describe("entropy-form", d, kappa, m, family);
  return b;
}

AbcBound abc_kl_form(const ConstantsRecord& c, std::size_t d, double kappa, std::size_t m,
                     Family family, const Conditioner& phi) {
  require_inputs(d, kappa, m);
  const double cd = c_dim(d, kappa, family, phi);
  AbcBound b;
  b.theorem = BoundTheorem::kKl;
  b.a = c.l_kl * c.l_kl * cd / (c.mu_kl * static_cast<double>(m));
  b.c = 2.0 * b.a * (c.F_star - c.f_kl_star);
  b.provenance = describe("KL-form", d, kappa, m, family);
  return b;
}

AbcBound abc_bounded_entropy(const ConstantsRecord& c, std::size_t d, double kappa, std::size_t m,
                             Family family, const Conditioner& phi) {
  require_inputs(d, kappa, m);
  if (!c.h_star) throw BoundNotApplicable("bounded-entropy bound: entropy floor h* is absent");
  if (family == Family::kSquareRoot)
    throw BoundNotApplicable("bounded-entropy bound covers mean-field and Cholesky only");
  const double cd = c_dim(d, kappa, family, phi);
  AbcBound b;
  b.theorem = BoundTheorem::kBoundedEntropy;
  b.a = c.l_h * c.l_h * cd / (c.mu_h * static_cast<double>(m));
  b.c = 2.0 * b.a * (c.F_star - c.f_h_star - *c.h_star);
  b.provenance = describe("bounded-entropy", d, kappa, m, family);
  return b;
}

AbcBound make_bound(BoundTheorem th, const ConstantsRecord& c, std::size_t d, double kappa,
                    std::size_t m, Family family, const Conditioner& phi) {
  switch (th) {
    case BoundTheorem::kEntropy: return abc_entropy_form(c, d, kappa, m, family, phi);
    case BoundTheorem::kKl: return abc_kl_form(c, d, kappa, m, family, phi);
    case BoundTheorem::kBoundedEntropy: return abc_bounded_entropy(c, d, kappa, m, family, phi);
  }
  throw std::invalid_argument("unknown theorem");
}

AbcTerms abc_terms(const AbcBound& bound, double gap, double grad_sqnorm) {
  if (gap < kGapClamp)
    throw std::invalid_argument("ABC evaluation: F - F* is negative beyond rounding");
  gap = std::max(gap, 0.0);
  return {2.0 * bound.a * gap, bound.b * grad_sqnorm, bound.c};
}

double evaluate_abc(const AbcBound& bound, double gap, double grad_sqnorm) {
  return abc_terms(bound, gap, grad_sqnorm).total();
}

double lower_bound_coefficient(double l_smooth, double mu, std::size_t d, std::size_t m) {
  if (!(l_smooth > 0.0 && mu > 0.0)) throw std::invalid_argument("lower bound: L and mu must be positive");
  if (m < 1) throw std::invalid_argument("lower bound: M must be >= 1");
  const double d1 = static_cast<double>(d) + 1.0;
  const double kappa_cond = l_smooth / mu;
  if (kappa_cond > std::sqrt(d1))
    throw BoundNotApplicable("lower bound not applicable: L/mu exceeds sqrt(d+1)");
  const double coef = (2.0 * mu * mu * d1 - 2.0 * l_smooth * l_smooth) /
                      (static_cast<double>(m) * l_smooth);
  return std::max(coef, 0.0);
}

namespace {

double lower_coefficient_for(const ConstantsRecord& c, std::size_t d, std::size_t m, Family family,
                             ElboForm form) {
  if (family != Family::kSquareRoot)
    throw BoundNotApplicable("lower bound not applicable: needs the matrix square-root family");
  const double l = form == ElboForm::kEntropy ? c.l_h : c.l_kl;
  const double mu = form == ElboForm::kEntropy ? c.mu_h : c.mu_kl;
  return lower_bound_coefficient(l, mu, d, m);
}

}  // namespace

double lower_bound_rhs(const ConstantsRecord& c, std::size_t d, std::size_t m, double gap,
                       double grad_sqnorm, double baseline, Family family, ElboForm form) {
  return lower_coefficient_for(c, d, m, family, form) * (gap + baseline) + grad_sqnorm;
}

double lower_bound_rhs_expected_f(const ConstantsRecord& c, std::size_t d, std::size_t m,
                                  double expected_f_gap, double grad_sqnorm, Family family,
                                  ElboForm form) {
  return lower_coefficient_for(c, d, m, family, form) * expected_f_gap + grad_sqnorm;
}

double lower_bound_baseline(const TargetModel& t, ElboForm form) {
  const OptimalScale opt = optimal_variational(t);
  const DenseMatrix c = opt.c.to_dense();
  const DenseMatrix p = form == ElboForm::kEntropy ? t.hessian_h() : t.hessian_kl();
  const double expected_f = t.f(form, opt.m) + 0.5 * dot(matmul(p, c).entries(), c.entries());
  Vector zbar;
  try {
    zbar = solve_spd(p, t.linear_term());
  } catch (const NumericalError&) {
    zbar = solve_spd(add_scaled_identity(p, 1e-10), t.linear_term());
  }
  return expected_f - t.f(form, zbar);
}

}  // namespace bbvi
