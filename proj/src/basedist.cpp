#include "bbvi/basedist.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/digamma.hpp>

namespace bbvi {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Marsaglia-Tsang; shape >= 1.
double gamma_draw(double shape, RngStream& rng) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = rng.normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.uniform();
    if (std::log1p(-u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

}  // namespace

std::uint64_t stream_id(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = mix64(a + kGolden);
  h = mix64(h ^ (b + 2 * kGolden));
  return mix64(h ^ (c + 3 * kGolden));
}

RngStream::RngStream(std::uint64_t root_seed, std::uint64_t stream_index)
    : seed_(root_seed), stream_(stream_index),
      key_(mix64(mix64(root_seed) ^ mix64(stream_index * kGolden + 0x632BE59BD9B4E019ULL))) {}

std::uint64_t RngStream::next_u64() { return mix64(key_ + kGolden * ++counter_); }

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RngStream::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

BaseDistribution BaseDistribution::student_t(double nu) {
  if (!(nu > 4.0))
    throw std::invalid_argument("student-t base: kurtosis undefined for nu <= 4");
  return BaseDistribution(Kind::kStudentT, nu);
}

Vector sample(const BaseDistribution& dist, std::size_t d, RngStream& rng) {
  if (d == 0) throw std::invalid_argument("sample: dimension must be >= 1");
  Vector u(d);
  if (dist.is_gaussian()) {
    for (double& v : u) v = rng.normal();
    return u;
  }
  const double nu = dist.dof();
  const double rescale = std::sqrt((nu - 2.0) / nu);
  for (double& v : u) {
    const double z = rng.normal();
    const double chi2 = 2.0 * gamma_draw(0.5 * nu, rng);
    v = rescale * z / std::sqrt(chi2 / nu);
  }
  return u;
}

double kurtosis(const BaseDistribution& dist) {
  if (dist.is_gaussian()) return 3.0;
  const double nu = dist.dof();
  return 3.0 * (nu - 2.0) / (nu - 4.0);
}

double entropy_per_dim(const BaseDistribution& dist) {
  if (dist.is_gaussian()) return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  const double nu = dist.dof();
  const double half = 0.5 * nu;
  const double half_up = 0.5 * (nu + 1.0);
  const double log_beta = std::lgamma(half) + std::lgamma(0.5) - std::lgamma(half_up);
  const double raw = half_up * (boost::math::digamma(half_up) - boost::math::digamma(half)) +
                     0.5 * std::log(nu) + log_beta;
  return raw + 0.5 * std::log((nu - 2.0) / nu);
}

}  // namespace bbvi
