#include <gtest/gtest.h>

#include "bbvi/checks.hpp"
#include "bbvi/estimator.hpp"
#include "oracles.hpp"

using namespace bbvi;

namespace {

TargetModel example_quadratic(std::size_t d = 5) {
  RngStream rng(9, 9);
  return quadratic_target(100.0, 0.3, 8.0, oracle::normals(d, rng));
}

}  // namespace

TEST(Estimator, EstimateIsMeanOfSamples) {
  const TargetModel t = example_quadratic();
  RngStream setup(1, 1);
  const auto dist = BaseDistribution::gaussian();
  for (const Family f : {Family::kMeanField, Family::kCholesky, Family::kSquareRoot}) {
    const auto p = oracle::random_params(f, 5, Conditioner::softplus(), setup, 0.5);
    RngStream a(77, 3), b(77, 3);
    const FlatGradient est = grad_estimate(t, ElboForm::kEntropy, p, dist, 7, a);
    FlatGradient sum{Vector(p.param_count(), 0.0)};
    for (int k = 0; k < 7; ++k) sum += grad_sample(t, ElboForm::kEntropy, p, dist, sample(dist, 5, b));
    sum *= 1.0 / 7.0;
    EXPECT_EQ(est.values, sum.values);
  }
}

TEST(Estimator, RejectsBadArguments) {
  const TargetModel t = example_quadratic();
  const auto p = VariationalParams::mean_field(Vector(5, 0.0), Vector(5, 0.0), Conditioner::softplus());
  const auto dist = BaseDistribution::gaussian();
  RngStream rng(1, 2);
  EXPECT_THROW(grad_estimate(t, ElboForm::kEntropy, p, dist, 0, rng), std::invalid_argument);
  EXPECT_THROW(empirical_sqnorm(t, ElboForm::kEntropy, p, dist, 10, 1, 5), std::invalid_argument);
  const auto wrong = VariationalParams::mean_field(Vector(4, 0.0), Vector(4, 0.0), Conditioner::softplus());
  EXPECT_THROW(grad_estimate(t, ElboForm::kEntropy, wrong, dist, 1, rng), std::invalid_argument);
  EXPECT_THROW(grad_estimate(t, ElboForm::kKl, p, BaseDistribution::student_t(8.0), 1, rng),
               std::invalid_argument);
}

TEST(Estimator, SeedsChangeEstimates) {
  const TargetModel t = example_quadratic();
  const auto p = VariationalParams::mean_field(Vector(5, 0.0), Vector(5, 0.0), Conditioner::softplus());
  const auto dist = BaseDistribution::gaussian();
  const auto a = empirical_sqnorm(t, ElboForm::kEntropy, p, dist, 10, 100, 1);
  const auto b = empirical_sqnorm(t, ElboForm::kEntropy, p, dist, 10, 100, 2);
  EXPECT_NE(a.second_moment, b.second_moment);
  EXPECT_EQ(a.replications, 100u);
  EXPECT_EQ(a.m_samples, 10u);
}

TEST(Estimator, ClosedFormSecondMomentMatchesEmpirical) {
  RngStream setup(2, 2);
  const TargetModel t = example_quadratic();
  for (const auto& dist : {BaseDistribution::gaussian(), BaseDistribution::student_t(8.0)}) {
    for (const Family f : {Family::kMeanField, Family::kCholesky, Family::kSquareRoot}) {
      const auto p = oracle::random_params(f, 5, Conditioner::softplus(), setup, 0.5);
      const auto v = empirical_sqnorm(t, ElboForm::kEntropy, p, dist, 5, 20000, setup.next_u64());
      const double exact = expected_sqnorm(t, ElboForm::kEntropy, p, dist, 5);
      EXPECT_LT(std::abs(v.second_moment - exact), 3.0 * v.std_error)
          << family_name(f) << " gaussian=" << dist.is_gaussian();
    }
  }
}

TEST(Estimator, VarianceShrinksAsOneOverM) {
  RngStream setup(3, 3);
  const TargetModel t = example_quadratic();
  const auto dist = BaseDistribution::gaussian();
  const auto p = oracle::random_params(Family::kCholesky, 5, Conditioner::softplus(), setup, 0.5);
  const double grad_sq = exact_elbo(t, p, dist).gradient.norm_sq();
  const double v1 = expected_sqnorm(t, ElboForm::kEntropy, p, dist, 1) - grad_sq;
  const double v10 = expected_sqnorm(t, ElboForm::kEntropy, p, dist, 10) - grad_sq;
  EXPECT_NEAR(v10 * 10.0, v1, 1e-9 * v1);
}

TEST(EstimatorProperties, Unbiased) {
  const auto r = check_unbiasedness(51, 1'000'000);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(EstimatorProperties, Determinism) {
  const auto r = check_variance_determinism(52);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(EstimatorProperties, VarianceDecomposition) {
  const auto r = check_variance_decomposition(53);
  EXPECT_TRUE(r.passed) << r.detail;
}
