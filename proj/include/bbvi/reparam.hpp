#pragma once

// Location-scale reparameterization t(u) = C u + m under the mean-field,
// Cholesky and matrix-square-root scale parameterizations, with diagonal
// conditioners for the first two.

#include <span>
#include <string_view>

#include "bbvi/basedist.hpp"
#include "bbvi/linalg.hpp"

namespace bbvi {

class Conditioner {
 public:
  enum class Kind { kIdentity, kSoftplus, kExp, kClippedSoftplus };

  struct Value {
    double value;
    double derivative;
  };

  static Conditioner identity() { return Conditioner(Kind::kIdentity, 0.0); }
  static Conditioner softplus() { return Conditioner(Kind::kSoftplus, 0.0); }
  static Conditioner exp() { return Conditioner(Kind::kExp, 0.0); }
  /// S * tanh(softplus(x) / S): smooth, 1-Lipschitz, strictly below S.
  static Conditioner clipped_softplus(double cap);

  Kind kind() const { return kind_; }
  double cap() const { return cap_; }
  bool one_lipschitz() const { return kind_ != Kind::kExp; }
  std::string_view name() const;

  Value operator()(double x) const;

  /// x with phi(x) = y. Throws std::invalid_argument("unrepresentable scale")
  /// when y is outside the range of phi.
  double inverse(double y) const;

  friend bool operator==(const Conditioner&, const Conditioner&) = default;

 private:
  Conditioner(Kind kind, double cap) : kind_(kind), cap_(cap) {}
  Kind kind_;
  double cap_;
};

/// Value and derivative of phi at x.
inline Conditioner::Value conditioner_eval(const Conditioner& phi, double x) { return phi(x); }

/// log(1 + e^x) evaluated without overflow.
double softplus(double x);
/// softplus^{-1}(y) for y > 0 by bisection.
double inverse_softplus(double y);

enum class Family { kMeanField, kCholesky, kSquareRoot };

std::string_view family_name(Family f);

/// Variational parameters lambda in the canonical flat order:
///   mean-field:  (m, s)
///   cholesky:    (m, s, L)   L = strictly-lower entries, row-major
///   square-root: (m, C)      C row-major
class VariationalParams {
 public:
  static VariationalParams mean_field(Vector m, Vector s, Conditioner phi);
  static VariationalParams cholesky(Vector m, Vector s, Vector l_strict, Conditioner phi);
  static VariationalParams square_root(Vector m, DenseMatrix c);
  static VariationalParams from_flat(Family family, std::size_t d, std::span<const double> flat,
                                     Conditioner phi);

  static std::size_t param_count(Family family, std::size_t d);
  static std::size_t strict_lower_index(std::size_t i, std::size_t j) { return i * (i - 1) / 2 + j; }

  Family family() const { return family_; }
  std::size_t dim() const { return m_.size(); }
  std::size_t param_count() const { return param_count(family_, dim()); }
  const Vector& m() const { return m_; }
  const Vector& s() const { return s_; }
  const Vector& l_strict() const { return l_; }
  const DenseMatrix& c_full() const { return c_; }
  const Conditioner& conditioner() const { return phi_; }

  Vector flat() const;

 private:
  VariationalParams(Family family, Vector m, Vector s, Vector l, DenseMatrix c, Conditioner phi);

  Family family_;
  Vector m_;
  Vector s_;
  Vector l_;
  DenseMatrix c_;
  Conditioner phi_;
};

struct FlatGradient {
  Vector values;

  FlatGradient& operator+=(const FlatGradient& other);
  FlatGradient& operator*=(double alpha);
  double norm_sq() const { return bbvi::norm_sq(values); }
};

/// Scale matrix C(lambda) as a dense matrix.
DenseMatrix build_scale(const VariationalParams& params);

/// t(u) = C u + m.
Vector transform(const VariationalParams& params, std::span<const double> u);

/// Chain rule from gradients with respect to (m, C) to the flat parameter
/// gradient. Entries of grad_c outside the parameterized pattern are ignored.
FlatGradient chain_to_flat(const VariationalParams& params, std::span<const double> grad_m,
                           const DenseMatrix& grad_c);

/// grad_lambda f(t(u)) given g_f = grad f(t(u)).
FlatGradient pullback(const VariationalParams& params, std::span<const double> u,
                      std::span<const double> g_f);

/// ||pullback(params, u, g_f)||^2 through the diagonal-matrix identity:
///   mean-field:  ||g||^2 + g' U Phi g
///   cholesky:    ||g||^2 + g' Sigma g + g' U (Phi - I) g
///   square-root: ||g||^2 (1 + ||u||^2)
/// with U_ii = u_i^2, Phi_ii = phi'(s_i)^2, Sigma_ii = sum_{j<=i} u_j^2.
double pullback_sqnorm_identity(const VariationalParams& params, std::span<const double> u,
                                std::span<const double> g_f);

/// H(q) = d H(phi) + log|C|.
double entropy(const VariationalParams& params, const BaseDistribution& dist);

/// grad_lambda log|C|; equals grad_lambda H(q).
FlatGradient entropy_gradient(const VariationalParams& params);

struct MatchedParams {
  VariationalParams mean_field;  // diag(C) only
  VariationalParams cholesky;
  VariationalParams square_root;
};

/// Parameters of all three families reproducing the same (m, C).
MatchedParams match_parameterizations(std::span<const double> m, const LowerTriangular& c,
                                      const Conditioner& phi);

}  // namespace bbvi
