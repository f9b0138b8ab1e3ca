#include "bbvi/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "bbvi/bounds.hpp"
#include "bbvi/dataset.hpp"
#include "bbvi/estimator.hpp"
#include "bbvi/experiment.hpp"
#include "bbvi/targets.hpp"

namespace bbvi {

namespace {

// Running mean and standard error.
struct Welford {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  double se() const {
    const double nn = static_cast<double>(n);
    return std::sqrt(m2 / (nn - 1.0) / nn);
  }
};

std::string fmt(const char* pattern, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, x);
  return buf;
}

std::string sci(double x) { return fmt("%.3e", x); }

Vector normal_vector(std::size_t d, RngStream& rng, double scale = 1.0) {
  Vector v(d);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

DenseMatrix normal_matrix(std::size_t r, std::size_t c, RngStream& rng, double scale = 1.0) {
  DenseMatrix a(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) a(i, j) = scale * rng.normal();
  return a;
}

Vector unit_vector(std::size_t d, RngStream& rng) {
  Vector v = normal_vector(d, rng);
  const double n = std::sqrt(norm_sq(v));
  for (auto& x : v) x /= n;
  return v;
}

// Lower-triangular scale with positive diagonal in [lo, hi].
LowerTriangular random_scale(std::size_t d, RngStream& rng, double lo, double hi) {
  LowerTriangular c(d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) c(i, j) = 0.5 * rng.normal();
    c(i, i) = lo + (hi - lo) * rng.uniform();
  }
  return c;
}

VariationalParams random_params(Family family, std::size_t d, const Conditioner& phi, RngStream& rng) {
  Vector m = normal_vector(d, rng);
  switch (family) {
    case Family::kMeanField: return VariationalParams::mean_field(m, normal_vector(d, rng), phi);
    case Family::kCholesky:
      return VariationalParams::cholesky(m, normal_vector(d, rng),
                                         normal_vector(d * (d - 1) / 2, rng, 0.5), phi);
    case Family::kSquareRoot:
      return VariationalParams::square_root(m, normal_matrix(d, d, rng, 0.5));
  }
  throw std::invalid_argument("unknown family");
}

std::vector<Conditioner> lipschitz_conditioners() {
  return {Conditioner::identity(), Conditioner::softplus(), Conditioner::clipped_softplus(2.0)};
}

std::vector<Conditioner> all_conditioners() {
  auto v = lipschitz_conditioners();
  v.push_back(Conditioner::exp());
  return v;
}

constexpr Family kFamilies[] = {Family::kMeanField, Family::kCholesky, Family::kSquareRoot};
constexpr ElboForm kForms[] = {ElboForm::kEntropy, ElboForm::kKl};

// Flat vector of the variational optimum, re-expressed in `family`.
VariationalParams optimum_in(const TargetModel& t, Family family, const Conditioner& phi) {
  const OptimalScale opt = optimal_variational(t);
  const MatchedParams mp = match_parameterizations(opt.m, opt.c, phi);
  switch (family) {
    case Family::kMeanField: return mp.mean_field;
    case Family::kCholesky: return mp.cholesky;
    case Family::kSquareRoot: return mp.square_root;
  }
  throw std::invalid_argument("unknown family");
}

TargetModel reference_quadratic(std::uint64_t seed, std::size_t d = 20, double lambda = 8.0) {
  RngStream rng(seed, stream_id(0x71756164));
  return quadratic_target(100.0, 0.3, lambda, normal_vector(d, rng));
}

TargetModel small_regression(std::uint64_t seed, std::size_t n = 50, std::size_t d = 5) {
  Dataset data = synthetic_regression(n, d, 0.5, seed);
  return linreg_target(data.x, data.y, 1.0, 1.0);
}

CheckResult make(std::string name, bool ok, std::string tol, std::string detail) {
  return {std::move(name), ok, std::move(tol), std::move(detail)};
}

}  // namespace

// ---------------------------------------------------------------- linalg

CheckResult check_cholesky_reconstruction(std::uint64_t seed) {
  RngStream rng(seed, stream_id(1, 1));
  double worst = 0.0;
  for (std::size_t d = 1; d <= 20; ++d) {
    for (int rep = 0; rep < 5; ++rep) {
      const DenseMatrix b = normal_matrix(d, d, rng);
      DenseMatrix a = add_scaled_identity(matmul(b, b.transpose()), 1.0);
      const DenseMatrix l = cholesky_spd(a).to_dense();
      const DenseMatrix rec = matmul(l, l.transpose());
      double err = 0.0;
      for (std::size_t i = 0; i < a.entries().size(); ++i)
        err += std::pow(rec.entries()[i] - a.entries()[i], 2);
      worst = std::max(worst, std::sqrt(err / frobenius_norm_sq(a)));
    }
  }
  return make("linalg.cholesky_reconstruction", worst <= 1e-10, "1e-10 relative Frobenius",
              "worst " + sci(worst));
}

CheckResult check_eigen_extremes(std::uint64_t seed) {
  RngStream rng(seed, stream_id(1, 2));
  double worst = 0.0;
  for (std::size_t d = 1; d <= 15; ++d) {
    // Q from Gram-Schmidt on a random matrix.
    DenseMatrix q = normal_matrix(d, d, rng);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = 0; k < j; ++k) {
        double proj = 0.0;
        for (std::size_t i = 0; i < d; ++i) proj += q(i, j) * q(i, k);
        for (std::size_t i = 0; i < d; ++i) q(i, j) -= proj * q(i, k);
      }
      double n = 0.0;
      for (std::size_t i = 0; i < d; ++i) n += q(i, j) * q(i, j);
      n = std::sqrt(n);
      for (std::size_t i = 0; i < d; ++i) q(i, j) /= n;
    }
    Vector lam(d);
    for (auto& x : lam) x = 0.1 + 10.0 * rng.uniform();
    DenseMatrix a = matmul(matmul(q, DenseMatrix::diagonal(lam)), q.transpose());
    for (std::size_t i = 0; i < d; ++i)  // exact symmetry
      for (std::size_t j = 0; j < i; ++j) a(j, i) = a(i, j);
    const EigenExtremes ex = sym_eig_extremes(a);
    const double lo = *std::min_element(lam.begin(), lam.end());
    const double hi = *std::max_element(lam.begin(), lam.end());
    worst = std::max({worst, std::abs(ex.min - lo) / lo, std::abs(ex.max - hi) / hi});
  }
  return make("linalg.eigen_extremes", worst <= 1e-8, "1e-8 relative", "worst " + sci(worst));
}

CheckResult check_logabsdet_consistency(std::uint64_t seed) {
  RngStream rng(seed, stream_id(1, 3));
  double worst = 0.0;
  for (std::size_t d = 1; d <= 20; ++d) {
    const LowerTriangular c = random_scale(d, rng, 0.2, 3.0);
    worst = std::max(worst, std::abs(logabsdet(c) - logabsdet(c.to_dense())));
  }
  return make("linalg.logabsdet_triangular_vs_dense", worst <= 1e-12, "1e-12 absolute",
              "worst " + sci(worst));
}

// -------------------------------------------------------------- basedist

CheckResult check_base_moments(const BaseDistribution& dist, std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, stream_id(2, 1));
  Welford m1, m2, m3, m4;
  constexpr std::size_t kChunk = 4096;
  for (std::size_t done = 0; done < n; done += kChunk) {
    const Vector u = sample(dist, std::min(kChunk, n - done), rng);
    for (const double x : u) {
      const double x2 = x * x;
      m1.add(x);
      m2.add(x2);
      m3.add(x2 * x);
      m4.add(x2 * x2);
    }
  }
  const double kappa = kurtosis(dist);
  const bool ok = std::abs(m1.mean) <= 4.0 * m1.se() && std::abs(m2.mean - 1.0) <= 0.01 &&
                  std::abs(m3.mean) <= 4.0 * m3.se() && std::abs(m4.mean - kappa) <= 3.0 * m4.se();
  const std::string name = dist.is_gaussian() ? "basedist.moments_gaussian"
                                              : "basedist.moments_student_t" + fmt("%g", dist.dof());
  std::ostringstream detail;
  detail << "n=" << n << " mean=" << sci(m1.mean) << " (4se " << sci(4 * m1.se()) << ") var="
         << fmt("%.6f", m2.mean) << " m3=" << sci(m3.mean) << " (4se " << sci(4 * m3.se())
         << ") m4=" << fmt("%.5f", m4.mean) << " vs " << fmt("%.5f", kappa) << " (3se "
         << sci(3 * m4.se()) << ")";
  return make(name, ok, "mean 4se, var 1%, third 4se, fourth 3se", detail.str());
}

CheckResult check_rng_determinism(std::uint64_t seed) {
  RngStream a(seed, 17), b(seed, 17), c(seed, 18);
  const auto dist = BaseDistribution::student_t(8.0);
  const Vector va = sample(dist, 1000, a), vb = sample(dist, 1000, b), vc = sample(dist, 1000, c);
  const bool ok = va == vb && va != vc;
  return make("basedist.rng_determinism", ok, "bit-exact", ok ? "equal streams replay" : "mismatch");
}

// --------------------------------------------------------------- reparam

CheckResult check_norm_identity(std::uint64_t seed, std::size_t trials, const SqnormIdentity& identity) {
  RngStream rng(seed, stream_id(3, 1));
  std::size_t failures = 0, total = 0;
  double worst = 0.0;
  for (const Family family : kFamilies) {
    const auto conds = family == Family::kSquareRoot ? std::vector<Conditioner>{Conditioner::identity()}
                                                     : all_conditioners();
    for (const Conditioner& phi : conds) {
      for (std::size_t k = 0; k < trials; ++k) {
        const std::size_t d = 1 + static_cast<std::size_t>(rng.uniform() * 20.0);
        const VariationalParams p = random_params(family, d, phi, rng);
        const Vector u = normal_vector(d, rng);
        const Vector g = normal_vector(d, rng);
        const double direct = pullback(p, u, g).norm_sq();
        const double err = std::abs(identity(p, u, g) - direct) / (1.0 + direct);
        worst = std::max(worst, err);
        ++total;
        if (!(err <= 1e-10)) ++failures;
      }
    }
  }
  return make("reparam.norm_identity", failures == 0, "1e-10 * (1 + ||pullback||^2)",
              std::to_string(failures) + "/" + std::to_string(total) + " failures, worst " + sci(worst));
}

CheckResult check_family_ordering(std::uint64_t seed, std::size_t trials) {
  RngStream rng(seed, stream_id(3, 2));
  std::size_t failures = 0;
  for (std::size_t k = 0; k < trials; ++k) {
    const std::size_t d = 1 + static_cast<std::size_t>(rng.uniform() * 20.0);
    const Vector m = normal_vector(d, rng);
    const LowerTriangular c = random_scale(d, rng, 0.05, 1.9);
    const Vector u = normal_vector(d, rng);
    const Vector g = normal_vector(d, rng);
    const auto clipped = match_parameterizations(m, c, Conditioner::clipped_softplus(2.0));
    const auto soft = match_parameterizations(m, c, Conditioner::softplus());
    const auto lin = match_parameterizations(m, c, Conditioner::identity());
    const double n_clip = pullback(clipped.cholesky, u, g).norm_sq();
    const double n_soft = pullback(soft.cholesky, u, g).norm_sq();
    const double n_lin = pullback(lin.cholesky, u, g).norm_sq();
    const double n_sqrt = pullback(soft.square_root, u, g).norm_sq();
    const double slack = 1e-12 * (1.0 + n_sqrt);
    if (!(n_clip <= n_soft + slack && n_soft <= n_lin + slack && n_lin <= n_sqrt + slack)) ++failures;
  }
  return make("reparam.family_ordering", failures == 0, "1e-12 slack",
              std::to_string(failures) + "/" + std::to_string(trials) + " violations");
}

CheckResult check_mean_field_norm_bound(std::uint64_t seed, std::size_t trials) {
  RngStream rng(seed, stream_id(3, 3));
  std::size_t failures = 0;
  for (const Conditioner& phi : lipschitz_conditioners()) {
    for (std::size_t k = 0; k < trials; ++k) {
      const std::size_t d = 1 + static_cast<std::size_t>(rng.uniform() * 20.0);
      const VariationalParams p = random_params(Family::kMeanField, d, phi, rng);
      const Vector u = normal_vector(d, rng);
      const Vector g = normal_vector(d, rng);
      double u_frob = 0.0;
      for (const double x : u) u_frob += x * x * x * x;
      const double bound = (1.0 + std::sqrt(u_frob)) * norm_sq(g);
      if (!(pullback(p, u, g).norm_sq() <= bound * (1.0 + 1e-12))) ++failures;
    }
  }
  return make("reparam.mean_field_norm_bound", failures == 0, "1e-12 relative",
              std::to_string(failures) + " violations");
}

CheckResult check_expectation_identities(const BaseDistribution& dist, std::size_t n,
                                         std::uint64_t seed) {
  constexpr std::size_t d = 5;
  RngStream setup(seed, stream_id(3, 4));
  const Vector z = normal_vector(d, setup);
  const Vector m = normal_vector(d, setup);
  const DenseMatrix c = random_scale(d, setup, 0.3, 1.5).to_dense();
  const Vector a = normal_vector(d, setup);
  const Vector b = normal_vector(d, setup);
  const double kappa = kurtosis(dist);
  const double dd = static_cast<double>(d);
  const double mz = norm_sq(subtract(m, z));
  const double cf = frobenius_norm_sq(c);
  const double ab = dot(a, b);

  Welford w[6];
  const double exact[6] = {mz + cf, (dd + 1.0) * mz + (dd + kappa) * cf, ab, dd, 0.0,
                           (dd - 1.0 + kappa) * ab};
  const char* names[6] = {"E||t-z||^2", "E||t-z||^2(1+||u||^2)", "E(a'u)(b'u)", "E||u||^2",
                          "E(a'u)(1+||u||^2)", "E(a'u)(b'u)||u||^2"};
  RngStream rng(seed, stream_id(3, 5, dist.is_gaussian() ? 0 : 1));
  for (std::size_t k = 0; k < n; ++k) {
    const Vector u = sample(dist, d, rng);
    const Vector t = axpy(1.0, matvec(c, u), m);
    const double r = norm_sq(subtract(t, z));
    const double uu = norm_sq(u);
    const double au = dot(a, u), bu = dot(b, u);
    w[0].add(r);
    w[1].add(r * (1.0 + uu));
    w[2].add(au * bu);
    w[3].add(uu);
    w[4].add(au * (1.0 + uu));
    w[5].add(au * bu * uu);
  }
  bool ok = true;
  std::ostringstream detail;
  for (int i = 0; i < 6; ++i) {
    const double z_score = std::abs(w[i].mean - exact[i]) / w[i].se();
    ok = ok && z_score <= 3.0;
    detail << names[i] << ": |z|=" << fmt("%.2f", z_score) << (i < 5 ? "; " : "");
  }
  const std::string name = std::string("reparam.expectation_identities_") +
                           (dist.is_gaussian() ? "gaussian" : "student_t");
  return make(name, ok, "3 standard errors, n=" + std::to_string(n), detail.str());
}

CheckResult check_mean_field_expectation_bound(const BaseDistribution& dist, std::size_t n,
                                               std::uint64_t seed) {
  constexpr std::size_t d = 5;
  RngStream setup(seed, stream_id(3, 6));
  const Vector z = normal_vector(d, setup);
  const Vector m = normal_vector(d, setup);
  Vector c(d);
  for (auto& x : c) x = 0.2 + setup.uniform();
  const double kappa = kurtosis(dist);
  const double sd = std::sqrt(static_cast<double>(d));
  const double rhs = (std::sqrt(static_cast<double>(d) * kappa) + kappa * sd + 1.0) *
                         norm_sq(subtract(m, z)) +
                     (2.0 * kappa * sd + 1.0) * norm_sq(c);
  RngStream rng(seed, stream_id(3, 7, dist.is_gaussian() ? 0 : 1));
  Welford w;
  for (std::size_t k = 0; k < n; ++k) {
    const Vector u = sample(dist, d, rng);
    double r = 0.0, u4 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      r += std::pow(c[i] * u[i] + m[i] - z[i], 2);
      u4 += std::pow(u[i], 4);
    }
    w.add(r * (1.0 + std::sqrt(u4)));
  }
  const bool ok = w.mean <= rhs + 3.0 * w.se();
  return make(std::string("reparam.mean_field_expectation_bound_") +
                  (dist.is_gaussian() ? "gaussian" : "student_t"),
              ok, "3 standard errors", "estimate " + sci(w.mean) + " <= bound " + sci(rhs));
}

// --------------------------------------------------------------- targets

CheckResult check_entropy_kl_agreement(std::uint64_t seed) {
  RngStream rng(seed, stream_id(4, 1));
  const BaseDistribution dist = BaseDistribution::gaussian();
  bool ok = true;
  std::ostringstream detail;
  const TargetModel targets[] = {reference_quadratic(seed, 6), small_regression(seed)};
  for (const TargetModel& t : targets) {
    const VariationalParams p = random_params(Family::kCholesky, t.dim(), Conditioner::softplus(), rng);
    const double h = entropy(p, dist);
    const double kl = kl_to_prior(p, t.prior_variance());
    Welford w;
    for (int k = 0; k < 100000; ++k) {
      const Vector zeta = transform(p, sample(dist, t.dim(), rng));
      w.add((t.f_h(zeta) - h) - (t.f_kl(zeta) + kl));
    }
    const double z_score = std::abs(w.mean) / w.se();
    ok = ok && z_score <= 3.0;
    detail << "|z|=" << fmt("%.2f", z_score) << ' ';
  }
  return make("targets.entropy_kl_agreement", ok, "3 standard errors, n=1e5", detail.str());
}

CheckResult check_stationary_points(std::uint64_t seed) {
  const BaseDistribution dist = BaseDistribution::gaussian();
  double worst = 0.0;
  for (const TargetModel& t : {reference_quadratic(seed), small_regression(seed)}) {
    const ConstantsRecord c = target_constants(t, dist);
    worst = std::max({worst, std::sqrt(norm_sq(t.grad_f_h(c.stationary_h))),
                      std::sqrt(norm_sq(t.grad_f_kl(c.stationary_kl)))});
  }
  return make("targets.stationary_points", worst <= 1e-8, "1e-8 absolute",
              "worst gradient norm " + sci(worst));
}

CheckResult check_quadratic_growth(std::uint64_t seed) {
  RngStream rng(seed, stream_id(4, 2));
  const BaseDistribution dist = BaseDistribution::gaussian();
  double worst = 0.0;  // most negative slack
  for (const TargetModel& t : {reference_quadratic(seed), small_regression(seed)}) {
    const ConstantsRecord c = target_constants(t, dist);
    for (int k = 0; k < 1000; ++k) {
      const Vector zeta = axpy(1.0, normal_vector(t.dim(), rng, 2.0), c.stationary_kl);
      const double lhs = t.f_kl(zeta) - c.f_kl_star;
      const double rhs = 0.5 * c.mu_kl * norm_sq(subtract(zeta, c.stationary_kl));
      worst = std::min(worst, lhs - rhs);
    }
  }
  return make("targets.quadratic_growth", worst >= -1e-9, "-1e-9 absolute",
              "min slack " + sci(worst));
}

CheckResult check_smoothness(std::uint64_t seed) {
  RngStream rng(seed, stream_id(4, 3));
  const BaseDistribution dist = BaseDistribution::gaussian();
  double worst = 0.0;  // max ratio ||dg|| / (L ||dz||)
  for (const TargetModel& t : {reference_quadratic(seed), small_regression(seed)}) {
    const ConstantsRecord c = target_constants(t, dist);
    for (int k = 0; k < 1000; ++k) {
      const Vector z1 = normal_vector(t.dim(), rng, 2.0);
      const Vector z2 = normal_vector(t.dim(), rng, 2.0);
      const double dz = std::sqrt(norm_sq(subtract(z1, z2)));
      const double gh = std::sqrt(norm_sq(subtract(t.grad_f_h(z1), t.grad_f_h(z2))));
      const double gk = std::sqrt(norm_sq(subtract(t.grad_f_kl(z1), t.grad_f_kl(z2))));
      worst = std::max({worst, gh / (c.l_h * dz), gk / (c.l_kl * dz)});
    }
  }
  return make("targets.smoothness", worst <= 1.0 + 1e-9, "ratio <= 1 + 1e-9",
              "max ratio " + fmt("%.12f", worst));
}

CheckResult check_fstar_validity(std::uint64_t seed) {
  const BaseDistribution dist = BaseDistribution::gaussian();
  const TargetModel t = reference_quadratic(seed);
  const ConstantsRecord c = target_constants(t, dist);
  double worst = 0.0;
  for (const Family family : kFamilies) {
    const VariationalParams p = optimum_in(t, family, Conditioner::softplus());
    worst = std::max(worst, std::abs(exact_elbo(t, p, dist).value - c.F_star));
  }
  return make("targets.fstar_validity", worst <= 1e-8, "1e-8 absolute",
              "worst |F(lambda*) - F*| " + sci(worst));
}

CheckResult check_fstar_marginal_likelihood(std::uint64_t seed) {
  const BaseDistribution dist = BaseDistribution::gaussian();
  const TargetModel t = small_regression(seed, 40, 6);
  const VariationalParams p = optimum_in(t, Family::kSquareRoot, Conditioner::identity());
  const double via_elbo = exact_elbo(t, p, dist).value;
  const double via_evidence = neg_log_marginal_likelihood(t);
  const double rel = std::abs(via_elbo - via_evidence) / std::max(1.0, std::abs(via_evidence));
  return make("targets.fstar_equals_neg_log_evidence", rel <= 1e-9, "1e-9 relative",
              "F(lambda*)=" + fmt("%.12g", via_elbo) + " -log p(y)=" + fmt("%.12g", via_evidence));
}

// ------------------------------------------------------------- estimator

CheckResult check_unbiasedness(std::uint64_t seed, std::size_t draws) {
  RngStream setup(seed, stream_id(5, 1));
  const BaseDistribution dist = BaseDistribution::gaussian();
  bool ok = true;
  double worst = 0.0;
  const TargetModel targets[] = {reference_quadratic(seed, 4), small_regression(seed, 30, 4)};
  for (const TargetModel& t : targets) {
    for (const Family family : kFamilies) {
      for (const ElboForm form : kForms) {
        const VariationalParams p = random_params(family, t.dim(), Conditioner::softplus(), setup);
        const Vector w = unit_vector(p.param_count(), setup);
        const double exact = dot(w, exact_elbo(t, p, dist, form).gradient.values);
        RngStream rng(seed, stream_id(5, 2, setup.next_u64()));
        Welford acc;
        for (std::size_t k = 0; k < draws; ++k)
          acc.add(dot(w, grad_sample(t, form, p, dist, sample(dist, t.dim(), rng)).values));
        const double z_score = std::abs(acc.mean - exact) / acc.se();
        worst = std::max(worst, z_score);
        ok = ok && z_score <= 3.0;
      }
    }
  }
  return make("estimator.unbiasedness", ok, "3 standard errors, n=" + std::to_string(draws),
              "12 cases (2 targets x 3 families x 2 forms), worst |z|=" + fmt("%.2f", worst));
}

CheckResult check_variance_determinism(std::uint64_t seed) {
  const TargetModel t = reference_quadratic(seed, 5);
  RngStream rng(seed, stream_id(5, 3));
  const VariationalParams p = random_params(Family::kCholesky, 5, Conditioner::softplus(), rng);
  const auto dist = BaseDistribution::gaussian();
  const VarianceEstimate a = empirical_sqnorm(t, ElboForm::kEntropy, p, dist, 10, 200, seed);
  const VarianceEstimate b = empirical_sqnorm(t, ElboForm::kEntropy, p, dist, 10, 200, seed);
  return make("estimator.variance_determinism", a == b, "bit-exact",
              a == b ? "identical estimates" : "estimates differ");
}

CheckResult check_variance_decomposition(std::uint64_t seed) {
  RngStream setup(seed, stream_id(5, 4));
  const BaseDistribution dist = BaseDistribution::gaussian();
  const TargetModel t = reference_quadratic(seed, 5);
  constexpr std::size_t kM = 10, kR = 1000;
  std::size_t failures = 0;
  for (int k = 0; k < 50; ++k) {
    const Family family = kFamilies[k % 3];
    const ElboForm form = kForms[(k / 3) % 2];
    const VariationalParams p = random_params(family, t.dim(), Conditioner::softplus(), setup);
    const std::uint64_t root = setup.next_u64();
    const VarianceEstimate lhs = empirical_sqnorm(t, form, p, dist, kM, kR, root);
    // Monte Carlo E||grad_lambda f(t(u))||^2 on an independent stream.
    RngStream rng(root, stream_id(5, 5));
    Welford pb;
    for (std::size_t i = 0; i < kM * kR; ++i) {
      const Vector u = sample(dist, t.dim(), rng);
      pb.add(pullback(p, u, t.grad_f(form, transform(p, u))).norm_sq());
    }
    const double grad_sq = exact_elbo(t, p, dist, form).gradient.norm_sq();
    const double rhs = pb.mean / kM + grad_sq;
    const double se = std::hypot(lhs.std_error, pb.se() / kM);
    if (!(lhs.second_moment <= rhs + 3.0 * se)) ++failures;
  }
  return make("estimator.variance_decomposition", failures == 0, "3 combined standard errors",
              std::to_string(failures) + "/50 violations");
}

// ---------------------------------------------------------------- bounds

CheckResult check_cdim_monotone() {
  bool ok = true;
  for (const Family family : kFamilies) {
    for (std::size_t d = 1; d < 50; ++d) {
      for (double kappa = 1.0; kappa < 20.0; kappa += 0.5) {
        const double base = c_dim(d, kappa, family);
        ok = ok && c_dim(d + 1, kappa, family) >= base && c_dim(d, kappa + 0.5, family) >= base;
      }
    }
  }
  return make("bounds.cdim_monotone", ok, "exact", ok ? "nondecreasing in d and kappa" : "decrease found");
}

CheckResult check_fertility_constant() {
  ConstantsRecord c;
  c.l_h = 1.840e3;
  c.mu_kl = 5.017e2;
  c.stationary_h = Vector(9, 0.0);
  c.stationary_kl = Vector(9, 0.0);
  const AbcBound b = abc_entropy_form(c, 9, 3.0, 10, Family::kCholesky);
  const double rel = std::abs(b.a - 1.620e4) / 1.620e4;
  return make("bounds.fertility_constant_A", rel <= 0.005, "0.5% relative",
              "A=" + fmt("%.6g", b.a) + " vs published 1.620e4");
}

CheckResult check_fstar_split(std::uint64_t seed) {
  RngStream rng(seed, stream_id(6, 1));
  const BaseDistribution dist = BaseDistribution::gaussian();
  const TargetModel t = reference_quadratic(seed, 8);
  const ConstantsRecord c = target_constants(t, dist);
  const VariationalParams p = random_params(Family::kCholesky, 8, Conditioner::softplus(), rng);
  const ElboValue ev = exact_elbo(t, p, dist);
  const double gap = ev.value - c.F_star;
  const double grad_sq = ev.gradient.norm_sq();
  const AbcBound base = abc_entropy_form(c, 8, 3.0, 10, Family::kCholesky, Conditioner::softplus());
  const double rhs0 = evaluate_abc(base, gap, grad_sq);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double delta = gap * (1.8 * rng.uniform() - 0.9);
    ConstantsRecord shifted = c;
    shifted.F_star += delta;
    const AbcBound b = abc_entropy_form(shifted, 8, 3.0, 10, Family::kCholesky, Conditioner::softplus());
    worst = std::max(worst, std::abs(evaluate_abc(b, gap - delta, grad_sq) - rhs0) / std::abs(rhs0));
  }
  return make("bounds.fstar_split_invariance", worst <= 1e-10, "1e-10 relative", "worst " + sci(worst));
}

CheckResult check_upper_bound_dominance(std::uint64_t seed) {
  RngStream rng(seed, stream_id(6, 2));
  const BaseDistribution dist = BaseDistribution::gaussian();
  const TargetModel t = reference_quadratic(seed);
  const ConstantsRecord c = target_constants(t, dist);
  const double kappa = kurtosis(dist);
  const Conditioner phi = Conditioner::softplus();
  std::size_t failures = 0, total = 0;
  double worst_ratio = 0.0;
  for (const Family family : kFamilies) {
    const Vector star = optimum_in(t, family, phi).flat();
    for (const ElboForm form : kForms) {
      const AbcBound bound =
          form == ElboForm::kEntropy ? abc_entropy_form(c, t.dim(), kappa, 10, family, phi)
                                     : abc_kl_form(c, t.dim(), kappa, 10, family, phi);
      for (int k = 0; k < 50; ++k) {
        // Perturbation scale spans 1e-3 .. 1 per coordinate.
        const double scale = std::pow(10.0, -3.0 + 3.0 * rng.uniform());
        const Vector flat = axpy(scale, normal_vector(star.size(), rng), star);
        const VariationalParams p = VariationalParams::from_flat(family, t.dim(), flat, phi);
        const ElboValue ev = exact_elbo(t, p, dist, form);
        const double rhs = evaluate_abc(bound, ev.value - c.F_star, ev.gradient.norm_sq());
        const VarianceEstimate v = empirical_sqnorm(t, form, p, dist, 10, 1000, rng.next_u64());
        ++total;
        worst_ratio = std::max(worst_ratio, v.second_moment / rhs);
        if (!(v.second_moment <= rhs + 3.0 * v.std_error)) ++failures;
      }
    }
  }
  return make("bounds.upper_bound_dominance", failures == 0, "3 standard errors (R=1000, M=10)",
              std::to_string(failures) + "/" + std::to_string(total) +
                  " violations, max gvar/bound " + sci(worst_ratio));
}

CheckResult check_lower_bound(std::uint64_t seed) {
  RngStream rng(seed, stream_id(6, 3));
  const BaseDistribution dist = BaseDistribution::gaussian();
  const TargetModel t = reference_quadratic(seed, 20, 1e8);
  const ConstantsRecord c = target_constants(t, dist);
  const double baseline = lower_bound_baseline(t);
  const Vector star = optimum_in(t, Family::kSquareRoot, Conditioner::identity()).flat();
  const double radius = 0.1 * std::sqrt(norm_sq(star));
  std::size_t failures = 0, exact_below = 0, expected_f_failures = 0;
  double worst_margin = INFINITY;
  for (int k = 0; k < 20; ++k) {
    const Vector flat = axpy(radius * rng.uniform(), unit_vector(star.size(), rng), star);
    const VariationalParams p = VariationalParams::from_flat(Family::kSquareRoot, 20, flat, Conditioner::identity());
    const ElboValue ev = exact_elbo(t, p, dist);
    const double g2 = ev.gradient.norm_sq();
    const double rhs = lower_bound_rhs(c, 20, 10, ev.value - c.F_star, g2, baseline);
    const VarianceEstimate v = empirical_sqnorm(t, ElboForm::kEntropy, p, dist, 10, 1000, rng.next_u64());
    worst_margin = std::min(worst_margin, (v.second_moment + 3.0 * v.std_error) / rhs);
    if (!(v.second_moment >= rhs - 3.0 * v.std_error)) ++failures;
    // Closed-form diagnostics: the entropy-free inequality must hold exactly.
    const double exact = expected_sqnorm(t, ElboForm::kEntropy, p, dist, 10);
    if (exact < rhs) ++exact_below;
    const double ef_gap = ev.value + entropy(p, dist) - c.f_h_star;
    if (exact < lower_bound_rhs_expected_f(c, 20, 10, ef_gap, g2) * (1.0 - 1e-12)) ++expected_f_failures;
  }
  return make("bounds.lower_bound", failures == 0 && expected_f_failures == 0, "3 standard errors (R=1000, M=10)",
              std::to_string(failures) + "/20 violations, min (gvar+3se)/bound " + fmt("%.4f", worst_margin) +
                  "; closed form below bound at " + std::to_string(exact_below) +
                  "/20, entropy-free form violated at " + std::to_string(expected_f_failures) + "/20");
}

// ------------------------------------------------------------ experiment

CheckResult check_trace_roundtrip(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.d = 5;
  cfg.iterations = 20;
  cfg.eval_every = 5;
  cfg.replications = 50;
  cfg.stepsize = 1e-4;
  cfg.seed = seed;
  const ExperimentSetup setup = build_setup(cfg);
  const auto records = trace_bounds(cfg, setup, sgd_run(cfg, setup));
  std::stringstream ss;
  write_trace_csv(records, ss);
  const auto back = read_trace_csv(ss);
  double worst = 0.0;
  for (const auto& r : records)
    worst = std::max(worst, std::abs(r.bound_rhs - (r.bound_a_term + r.bound_b_term + r.bound_c_const)) /
                                std::max(1.0, std::abs(r.bound_rhs)));
  const bool ok = back == records && worst <= 1e-12;
  return make("experiment.trace_roundtrip_and_decomposition", ok,
              "bit-exact round trip; decomposition 1e-12",
              std::to_string(records.size()) + " records, decomposition error " + sci(worst));
}

// ----------------------------------------------------------------- suite

std::vector<CheckResult> run_verify_suite(std::uint64_t seed) {
  const auto gauss = BaseDistribution::gaussian();
  const auto t8 = BaseDistribution::student_t(8.0);
  return {
      check_cholesky_reconstruction(seed),
      check_eigen_extremes(seed),
      check_logabsdet_consistency(seed),
      check_base_moments(gauss, 10'000'000, seed),
      check_base_moments(t8, 10'000'000, seed),
      check_rng_determinism(seed),
      check_norm_identity(seed),
      check_family_ordering(seed),
      check_mean_field_norm_bound(seed),
      check_expectation_identities(gauss, 1'000'000, seed),
      check_expectation_identities(t8, 1'000'000, seed),
      check_mean_field_expectation_bound(gauss, 1'000'000, seed),
      check_mean_field_expectation_bound(t8, 1'000'000, seed),
      check_entropy_kl_agreement(seed),
      check_stationary_points(seed),
      check_quadratic_growth(seed),
      check_smoothness(seed),
      check_fstar_validity(seed),
      check_fstar_marginal_likelihood(seed),
      check_unbiasedness(seed, 10'000'000),
      check_variance_determinism(seed),
      check_variance_decomposition(seed),
      check_cdim_monotone(),
      check_fertility_constant(),
      check_fstar_split(seed),
      check_upper_bound_dominance(seed),
      check_lower_bound(seed),
      check_trace_roundtrip(seed),
  };
}

void write_report_json(const std::vector<CheckResult>& results, std::ostream& out) {
  nlohmann::json report;
  bool all = true;
  report["checks"] = nlohmann::json::array();
  for (const auto& r : results) {
    all = all && r.passed;
    report["checks"].push_back(
        {{"name", r.name}, {"passed", r.passed}, {"tolerance", r.tolerance}, {"detail", r.detail}});
  }
  report["passed"] = all;
  out << report.dump(2) << '\n';
}

}  // namespace bbvi
