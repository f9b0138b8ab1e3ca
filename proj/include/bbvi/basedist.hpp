#pragma once

#include <cstdint>
#include <optional>

#include "bbvi/linalg.hpp"

namespace bbvi {

/// Counter-based random stream. A stream is identified by (root seed,
/// stream index); the n-th 64-bit output is a pure function of those two
/// values and n, so copies of a stream replay identical draws.
class RngStream {
 public:
  RngStream(std::uint64_t root_seed, std::uint64_t stream_index);

  std::uint64_t root_seed() const { return seed_; }
  std::uint64_t stream_index() const { return stream_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal by the Box-Muller transform; the second value of each
  /// pair is kept for the next call.
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<double> spare_;
};

/// Mixes any number of 64-bit words into one stream index.
std::uint64_t stream_id(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

/// Standardized, symmetric, i.i.d. base distribution: every component has
/// mean 0, variance 1, zero third moment and finite kurtosis.
class BaseDistribution {
 public:
  enum class Kind { kGaussian, kStudentT };

  static BaseDistribution gaussian() { return BaseDistribution(Kind::kGaussian, 0.0); }
  /// Throws std::invalid_argument when nu <= 4 (kurtosis undefined).
  static BaseDistribution student_t(double nu);

  Kind kind() const { return kind_; }
  double dof() const { return nu_; }
  bool is_gaussian() const { return kind_ == Kind::kGaussian; }

 private:
  BaseDistribution(Kind kind, double nu) : kind_(kind), nu_(nu) {}
  Kind kind_;
  double nu_;
};

/// d i.i.d. standardized draws.
Vector sample(const BaseDistribution& dist, std::size_t d, RngStream& rng);

/// Fourth moment of one component: 3 for the gaussian, 3(nu-2)/(nu-4) for
/// the standardized Student-t.
double kurtosis(const BaseDistribution& dist);

/// Differential entropy of one component.
double entropy_per_dim(const BaseDistribution& dist);

}  // namespace bbvi
