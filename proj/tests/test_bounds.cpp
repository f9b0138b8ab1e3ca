#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "bbvi/bounds.hpp"
#include "bbvi/checks.hpp"
#include "bbvi/estimator.hpp"
#include "oracles.hpp"

using namespace bbvi;

namespace {

ConstantsRecord fertility_row() {
  ConstantsRecord c;
  c.l_h = 1.840e3;
  c.l_kl = 1.840e3;
  c.mu_kl = 5.017e2;
  c.stationary_h = Vector(9, 0.0);
  c.stationary_kl = Vector(9, 0.0);
  return c;
}

TargetModel reference_quadratic(std::size_t d = 20, double lambda = 8.0) {
  RngStream rng(5, 5);
  return quadratic_target(100.0, 0.3, lambda, oracle::normals(d, rng));
}

}  // namespace

TEST(Bounds, DimensionFactor) {
  EXPECT_DOUBLE_EQ(c_dim(4, 3.0, Family::kMeanField), 13.0);
  EXPECT_DOUBLE_EQ(c_dim(9, 3.0, Family::kCholesky), 12.0);
  EXPECT_DOUBLE_EQ(c_dim(9, 3.0, Family::kSquareRoot), 12.0);
  EXPECT_DOUBLE_EQ(c_dim(1, 1.0, Family::kMeanField), 3.0);
  EXPECT_DOUBLE_EQ(c_dim(1, 1.0, Family::kCholesky), 2.0);
}

TEST(Bounds, ExpConditionerIsRefused) {
  EXPECT_THROW(c_dim(3, 3.0, Family::kCholesky, Conditioner::exp()), BoundNotApplicable);
  EXPECT_NO_THROW(c_dim(3, 3.0, Family::kSquareRoot, Conditioner::exp()));
}

TEST(Bounds, FertilityRowConstant) {
  const AbcBound b = abc_entropy_form(fertility_row(), 9, 3.0, 10, Family::kCholesky);
  EXPECT_NEAR(b.a, 1.620e4, 0.005 * 1.620e4);
  EXPECT_DOUBLE_EQ(b.b, 1.0);
  EXPECT_DOUBLE_EQ(b.c, 0.0);  // coincident stationary points, F* = f*_KL
}

TEST(Bounds, KlFormHalvesEntropyFormA) {
  const AbcBound e = abc_entropy_form(fertility_row(), 9, 3.0, 10, Family::kCholesky);
  const AbcBound k = abc_kl_form(fertility_row(), 9, 3.0, 10, Family::kCholesky);
  EXPECT_NEAR(k.a, 0.5 * e.a, 1e-9 * e.a);
  EXPECT_NEAR(k.a, 8.098e3, 0.005 * 8.098e3);
}

TEST(Bounds, QuadraticConfigAByHand) {
  const TargetModel t = reference_quadratic();
  const ConstantsRecord c = target_constants(t, BaseDistribution::gaussian());
  const double a = 100.0 / 0.09;
  const double l_h = 2 * a + 2.0 / 8.0, mu_kl = 2 * a;
  const double expected = 2 * l_h * l_h * (20 + 3) / (mu_kl * 10);
  EXPECT_NEAR(abc_entropy_form(c, 20, 3.0, 10, Family::kCholesky).a, expected, 1e-9 * expected);
  const double expected_mf = 2 * l_h * l_h * (2 * 3 * std::sqrt(20.0) + 1) / (mu_kl * 10);
  EXPECT_NEAR(abc_entropy_form(c, 20, 3.0, 10, Family::kMeanField).a, expected_mf, 1e-9 * expected_mf);
}

TEST(Bounds, EntropyFormNeedsStationaryPoints) {
  ConstantsRecord c = fertility_row();
  c.stationary_h.clear();
  EXPECT_THROW(abc_entropy_form(c, 9, 3.0, 10, Family::kCholesky), std::invalid_argument);
}

TEST(Bounds, BoundedEntropyFloor) {
  const TargetModel t = reference_quadratic();
  const auto dist = BaseDistribution::gaussian();
  const Conditioner phi = Conditioner::clipped_softplus(2.0);
  const ConstantsRecord c2 = target_constants(t, dist, 2.0);
  const double h = -20 * 0.5 * std::log(2 * std::numbers::pi * std::numbers::e) - 20 * std::log(2.0);
  EXPECT_NEAR(*c2.h_star, h, 1e-12);
  const AbcBound b = abc_bounded_entropy(c2, 20, 3.0, 10, Family::kCholesky, phi);
  EXPECT_NEAR(b.a, c2.l_h * c2.l_h * 23 / (c2.mu_h * 10), 1e-9 * b.a);
  EXPECT_NEAR(b.c, 2 * b.a * (c2.F_star - c2.f_h_star - h), 1e-9 * b.c);
}

TEST(Bounds, BoundedEntropyConstantGrowsWithCap) {
  const TargetModel t = reference_quadratic();
  const auto dist = BaseDistribution::gaussian();
  double prev = -INFINITY;
  for (double s : {1.0, 2.0, 10.0, 1e3, 1e6}) {
    const auto b = abc_bounded_entropy(target_constants(t, dist, s), 20, 3.0, 10, Family::kCholesky,
                                       Conditioner::clipped_softplus(s));
    EXPECT_GT(b.c, prev);
    prev = b.c;
  }
}

TEST(Bounds, BoundedEntropyNeedsFloor) {
  const TargetModel t = reference_quadratic();
  const ConstantsRecord c = target_constants(t, BaseDistribution::gaussian());
  EXPECT_THROW(abc_bounded_entropy(c, 20, 3.0, 10, Family::kCholesky, Conditioner::softplus()),
               BoundNotApplicable);
}

TEST(Bounds, EvaluateAbc) {
  AbcBound b;
  b.a = 1.0;
  b.b = 1.0;
  b.c = 0.0;
  EXPECT_DOUBLE_EQ(evaluate_abc(b, 2.0, 5.0), 9.0);
  b.c = 4.0;
  EXPECT_DOUBLE_EQ(evaluate_abc(b, 0.0, 0.0), 4.0);
  EXPECT_DOUBLE_EQ(evaluate_abc(b, -5e-10, 0.0), 4.0);  // clamped
  EXPECT_THROW(evaluate_abc(b, -1e-6, 0.0), std::invalid_argument);
  const AbcTerms terms = abc_terms(b, 2.0, 5.0);
  EXPECT_DOUBLE_EQ(terms.a_term, 4.0);
  EXPECT_DOUBLE_EQ(terms.b_term, 5.0);
  EXPECT_DOUBLE_EQ(terms.total(), 13.0);
}

TEST(Bounds, LowerBoundCoefficient) {
  const double mu = 3.7;
  EXPECT_NEAR(lower_bound_coefficient(mu, mu, 20, 10), 4.0 * mu, 1e-12);
  EXPECT_NEAR(lower_bound_coefficient(std::sqrt(21.0) * mu * (1 - 1e-15), mu, 20, 10), 0.0, 1e-9);
  EXPECT_THROW(lower_bound_coefficient(5.0 * mu, mu, 20, 10), BoundNotApplicable);
}

TEST(Bounds, LowerBoundAtBoundaryIsGradientNorm) {
  ConstantsRecord c;
  c.l_h = 2.0;
  c.mu_h = 2.0 / std::sqrt(4.0);  // L/mu = sqrt(d+1) for d = 3
  EXPECT_NEAR(lower_bound_rhs(c, 3, 10, 5.0, 7.0, 1.5), 7.0, 1e-12);
}

TEST(Bounds, LowerBoundNeedsSquareRoot) {
  ConstantsRecord c;
  c.l_h = c.mu_h = 1.0;
  EXPECT_THROW(lower_bound_rhs(c, 3, 10, 0.0, 0.0, 1.0, Family::kCholesky), BoundNotApplicable);
}

TEST(Bounds, BaselineOfQuadraticIsHalfDimension) {
  // E f(t_{lambda*}(u)) - f* = tr(H_H H_H^{-1}) / 2 = d / 2.
  EXPECT_NEAR(lower_bound_baseline(reference_quadratic(20)), 10.0, 1e-8);
  EXPECT_NEAR(lower_bound_baseline(reference_quadratic(7)), 3.5, 1e-8);
}

TEST(BoundsProperties, DimensionFactorMonotone) {
  const auto r = check_cdim_monotone();
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(BoundsProperties, FertilityConstant) {
  const auto r = check_fertility_constant();
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(BoundsProperties, FStarSplitInvariance) {
  const auto r = check_fstar_split(61);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(BoundsProperties, UpperBoundDominatesVariance) {
  const auto r = check_upper_bound_dominance(62);
  EXPECT_TRUE(r.passed) << r.detail;
}

namespace {

struct LowerBoundPoint {
  double exact;      // closed-form E||g_M||^2
  double stated;     // lower_bound_rhs
  double expected_f; // lower_bound_rhs_expected_f
  double h_excess;   // h(lambda) - h(lambda*)
};

// Points within 0.1 ||lambda*|| of the optimum of a perfectly conditioned quadratic.
std::vector<LowerBoundPoint> lower_bound_points(std::uint64_t seed, int count) {
  RngStream rng(seed, 1);
  const auto dist = BaseDistribution::gaussian();
  const TargetModel t = quadratic_target(100.0, 0.3, 1e8, oracle::normals(20, rng));
  const ConstantsRecord c = target_constants(t, dist);
  const double baseline = lower_bound_baseline(t);
  const OptimalScale opt = optimal_variational(t);
  const auto p_star = match_parameterizations(opt.m, opt.c, Conditioner::identity()).square_root;
  const Vector star = p_star.flat();
  const double radius = 0.1 * std::sqrt(norm_sq(star));
  std::vector<LowerBoundPoint> out;
  for (int k = 0; k < count; ++k) {
    const Vector dir = oracle::normals(star.size(), rng);
    const Vector flat = axpy(radius * rng.uniform() / std::sqrt(norm_sq(dir)), dir, star);
    const auto p = VariationalParams::from_flat(Family::kSquareRoot, 20, flat, Conditioner::identity());
    const ElboValue ev = exact_elbo(t, p, dist);
    const double g2 = ev.gradient.norm_sq();
    const double ef_gap = ev.value + entropy(p, dist) - c.f_h_star;
    out.push_back({expected_sqnorm(t, ElboForm::kEntropy, p, dist, 10),
                   lower_bound_rhs(c, 20, 10, ev.value - c.F_star, g2, baseline),
                   lower_bound_rhs_expected_f(c, 20, 10, ef_gap, g2),
                   entropy(p_star, dist) - entropy(p, dist)});
  }
  return out;
}

}  // namespace

TEST(BoundsProperties, LowerBoundWithoutEntropyTermHoldsExactly) {
  for (const auto& pt : lower_bound_points(63, 200)) EXPECT_GE(pt.exact, pt.expected_f * (1 - 1e-12));
}

TEST(BoundsProperties, LowerBoundFormsDifferByEntropyChange) {
  // stated - entropy-free = coefficient * (h(lambda) - h(lambda*)), coefficient = 4 mu for L = mu.
  RngStream rng(63, 1);
  const TargetModel t = quadratic_target(100.0, 0.3, 1e8, oracle::normals(20, rng));
  const ConstantsRecord c = target_constants(t, BaseDistribution::gaussian());
  const double coef = lower_bound_coefficient(c.l_h, c.mu_h, 20, 10);
  for (const auto& pt : lower_bound_points(63, 200)) {
    EXPECT_NEAR(pt.stated - pt.expected_f, coef * pt.h_excess, 1e-9 * pt.stated);
    if (pt.h_excess <= 0.0) EXPECT_GE(pt.exact, pt.stated * (1 - 1e-12));
  }
}
