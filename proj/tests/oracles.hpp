#pragma once

// Reference computations that avoid the library's analytic paths: central
// differences, Simpson quadrature, running Monte Carlo statistics.

#include <cmath>
#include <functional>
#include <vector>

#include "bbvi/basedist.hpp"
#include "bbvi/reparam.hpp"

namespace oracle {

using Vec = std::vector<double>;

inline Vec central_difference(const std::function<double(const Vec&)>& f, Vec x, double h = 1e-5) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double step = h * std::max(1.0, std::abs(xi));
    x[i] = xi + step;
    const double fp = f(x);
    x[i] = xi - step;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

/// max_i |a_i - b_i| / max(1, max_i |b_i|).
inline double rel_error(const Vec& a, const Vec& b) {
  double diff = 0.0, scale = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / scale;
}

inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 200000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

struct Stat {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double se() const { return std::sqrt(m2 / (n - 1.0) / static_cast<double>(n)); }
  double z(double truth) const { return std::abs(mean - truth) / se(); }
};

inline Vec normals(std::size_t d, bbvi::RngStream& rng, double scale = 1.0) {
  Vec v(d);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

/// Params with every pre-parameter drawn from N(0, scale^2).
inline bbvi::VariationalParams random_params(bbvi::Family f, std::size_t d,
                                             const bbvi::Conditioner& phi, bbvi::RngStream& rng,
                                             double scale = 1.0) {
  const std::size_t p = bbvi::VariationalParams::param_count(f, d);
  return bbvi::VariationalParams::from_flat(f, d, normals(p, rng, scale), phi);
}

/// random_params with the raw diagonal shifted by `offset`, keeping C away from
/// singular so central differences of log|det C| stay accurate.
inline bbvi::VariationalParams well_conditioned_params(bbvi::Family f, std::size_t d,
                                                       const bbvi::Conditioner& phi, bbvi::RngStream& rng,
                                                       double scale, double offset = 1.0) {
  Vec flat = normals(bbvi::VariationalParams::param_count(f, d), rng, scale);
  for (std::size_t i = 0; i < d; ++i) flat[f == bbvi::Family::kSquareRoot ? d + i * d + i : d + i] += offset;
  return bbvi::VariationalParams::from_flat(f, d, flat, phi);
}

/// Scale matrix rebuilt entry by entry from the flat layout.
inline std::vector<std::vector<double>> scale_from_flat(bbvi::Family f, std::size_t d, const Vec& flat,
                                                        const bbvi::Conditioner& phi) {
  std::vector<std::vector<double>> c(d, std::vector<double>(d, 0.0));
  if (f == bbvi::Family::kSquareRoot) {
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) c[i][j] = flat[d + i * d + j];
    return c;
  }
  for (std::size_t i = 0; i < d; ++i) c[i][i] = phi(flat[d + i]).value;
  if (f == bbvi::Family::kCholesky) {
    std::size_t k = 2 * d;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < i; ++j) c[i][j] = flat[k++];
  }
  return c;
}

inline Vec location_scale(const Vec& m, const std::vector<std::vector<double>>& c, const Vec& u) {
  Vec z = m;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) z[i] += c[i][j] * u[j];
  return z;
}

}  // namespace oracle
