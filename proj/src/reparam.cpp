#include "bbvi/reparam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace bbvi {

namespace {

constexpr int kBisectionMaxIter = 400;
constexpr double kBisectionTol = 1e-14;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double inverse_softplus(double y) {
  if (!(y > 0.0) || !std::isfinite(y))
    throw std::invalid_argument("unrepresentable scale: softplus output must be positive");
  // softplus(log y) = log(1 + y) <= y < softplus(y).
  double lo = std::log(y);
  double hi = y;
  for (int it = 0; it < kBisectionMaxIter; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (softplus(mid) < y)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= kBisectionTol * std::max(1.0, std::abs(mid))) break;
  }
  return 0.5 * (lo + hi);
}

Conditioner Conditioner::clipped_softplus(double cap) {
  require(cap > 0.0 && std::isfinite(cap), "clipped-softplus cap S must be positive");
  return Conditioner(Kind::kClippedSoftplus, cap);
}

std::string_view Conditioner::name() const {
  switch (kind_) {
    case Kind::kIdentity: return "identity";
    case Kind::kSoftplus: return "softplus";
    case Kind::kExp: return "exp";
    case Kind::kClippedSoftplus: return "clipped-softplus";
  }
  return "unknown";
}

Conditioner::Value Conditioner::operator()(double x) const {
  switch (kind_) {
    case Kind::kIdentity:
      return {x, 1.0};
    case Kind::kSoftplus:
      return {bbvi::softplus(x), sigmoid(x)};
    case Kind::kExp: {
      const double e = std::exp(x);
      return {e, e};
    }
    case Kind::kClippedSoftplus: {
      const double th = std::tanh(bbvi::softplus(x) / cap_);
      return {cap_ * th, (1.0 - th * th) * sigmoid(x)};
    }
  }
  return {x, 1.0};
}

double Conditioner::inverse(double y) const {
  switch (kind_) {
    case Kind::kIdentity:
      return y;
    case Kind::kSoftplus:
      return inverse_softplus(y);
    case Kind::kExp:
      if (!(y > 0.0)) throw std::invalid_argument("unrepresentable scale: exp output must be positive");
      return std::log(y);
    case Kind::kClippedSoftplus:
      if (!(y > 0.0 && y < cap_))
        throw std::invalid_argument("unrepresentable scale: clipped-softplus output must lie in (0, S)");
      return inverse_softplus(cap_ * std::atanh(y / cap_));
  }
  return y;
}

std::string_view family_name(Family f) {
  switch (f) {
    case Family::kMeanField: return "mean-field";
    case Family::kCholesky: return "cholesky";
    case Family::kSquareRoot: return "square-root";
  }
  return "unknown";
}

VariationalParams::VariationalParams(Family family, Vector m, Vector s, Vector l, DenseMatrix c,
                                     Conditioner phi)
    : family_(family), m_(std::move(m)), s_(std::move(s)), l_(std::move(l)), c_(std::move(c)),
      phi_(phi) {
  require(!m_.empty(), "variational parameters need dimension >= 1");
  for (double v : flat())
    if (!std::isfinite(v)) throw std::invalid_argument("variational parameters must be finite");
}

VariationalParams VariationalParams::mean_field(Vector m, Vector s, Conditioner phi) {
  require(m.size() == s.size(), "mean-field: s must have length d");
  return VariationalParams(Family::kMeanField, std::move(m), std::move(s), {}, {}, phi);
}

VariationalParams VariationalParams::cholesky(Vector m, Vector s, Vector l_strict, Conditioner phi) {
  const std::size_t d = m.size();
  require(s.size() == d, "cholesky: s must have length d");
  require(l_strict.size() == d * (d - (d > 0 ? 1 : 0)) / 2, "cholesky: L must have d(d-1)/2 entries");
  return VariationalParams(Family::kCholesky, std::move(m), std::move(s), std::move(l_strict), {}, phi);
}

VariationalParams VariationalParams::square_root(Vector m, DenseMatrix c) {
  require(c.rows() == m.size() && c.cols() == m.size(), "square-root: C must be d x d");
  return VariationalParams(Family::kSquareRoot, std::move(m), {}, {}, std::move(c),
                           Conditioner::identity());
}

std::size_t VariationalParams::param_count(Family family, std::size_t d) {
  switch (family) {
    case Family::kMeanField: return 2 * d;
    case Family::kCholesky: return d + d * (d + 1) / 2;
    case Family::kSquareRoot: return d + d * d;
  }
  return 0;
}

VariationalParams VariationalParams::from_flat(Family family, std::size_t d,
                                               std::span<const double> flat, Conditioner phi) {
  require(flat.size() == param_count(family, d), "flat parameter vector has the wrong length");
  Vector m(flat.begin(), flat.begin() + d);
  auto rest = flat.subspan(d);
  switch (family) {
    case Family::kMeanField:
      return mean_field(std::move(m), Vector(rest.begin(), rest.end()), phi);
    case Family::kCholesky:
      return cholesky(std::move(m), Vector(rest.begin(), rest.begin() + d),
                      Vector(rest.begin() + d, rest.end()), phi);
    case Family::kSquareRoot:
      return square_root(std::move(m), DenseMatrix(d, d, Vector(rest.begin(), rest.end())));
  }
  throw std::invalid_argument("unknown family");
}

Vector VariationalParams::flat() const {
  Vector out(m_);
  out.insert(out.end(), s_.begin(), s_.end());
  out.insert(out.end(), l_.begin(), l_.end());
  const auto c = c_.entries();
  out.insert(out.end(), c.begin(), c.end());
  return out;
}

FlatGradient& FlatGradient::operator+=(const FlatGradient& other) {
  require(values.size() == other.values.size(), "gradient length mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values[i];
  return *this;
}

FlatGradient& FlatGradient::operator*=(double alpha) {
  for (double& v : values) v *= alpha;
  return *this;
}

DenseMatrix build_scale(const VariationalParams& params) {
  const std::size_t d = params.dim();
  if (params.family() == Family::kSquareRoot) return params.c_full();
  DenseMatrix c(d, d);
  for (std::size_t i = 0; i < d; ++i) c(i, i) = params.conditioner()(params.s()[i]).value;
  if (params.family() == Family::kCholesky) {
    for (std::size_t i = 1; i < d; ++i)
      for (std::size_t j = 0; j < i; ++j)
        c(i, j) = params.l_strict()[VariationalParams::strict_lower_index(i, j)];
  }
  return c;
}

Vector transform(const VariationalParams& params, std::span<const double> u) {
  require(u.size() == params.dim(), "transform: dim(u) must equal d");
  const std::size_t d = params.dim();
  const auto& m = params.m();
  Vector z(d);
  switch (params.family()) {
    case Family::kMeanField:
      for (std::size_t i = 0; i < d; ++i) z[i] = params.conditioner()(params.s()[i]).value * u[i] + m[i];
      break;
    case Family::kCholesky:
      for (std::size_t i = 0; i < d; ++i) {
        double acc = params.conditioner()(params.s()[i]).value * u[i];
        const double* row = params.l_strict().data() + (i == 0 ? 0 : VariationalParams::strict_lower_index(i, 0));
        for (std::size_t j = 0; j < i; ++j) acc += row[j] * u[j];
        z[i] = acc + m[i];
      }
      break;
    case Family::kSquareRoot: {
      z = matvec(params.c_full(), u);
      for (std::size_t i = 0; i < d; ++i) z[i] += m[i];
      break;
    }
  }
  return z;
}

FlatGradient chain_to_flat(const VariationalParams& params, std::span<const double> grad_m,
                           const DenseMatrix& grad_c) {
  const std::size_t d = params.dim();
  require(grad_m.size() == d && grad_c.rows() == d && grad_c.cols() == d,
          "chain_to_flat: shape mismatch");
  FlatGradient g{Vector(grad_m.begin(), grad_m.end())};
  g.values.reserve(params.param_count());
  if (params.family() == Family::kSquareRoot) {
    const auto e = grad_c.entries();
    g.values.insert(g.values.end(), e.begin(), e.end());
    return g;
  }
  for (std::size_t i = 0; i < d; ++i)
    g.values.push_back(grad_c(i, i) * params.conditioner()(params.s()[i]).derivative);
  if (params.family() == Family::kCholesky)
    for (std::size_t i = 1; i < d; ++i)
      for (std::size_t j = 0; j < i; ++j) g.values.push_back(grad_c(i, j));
  return g;
}

FlatGradient pullback(const VariationalParams& params, std::span<const double> u,
                      std::span<const double> g_f) {
  const std::size_t d = params.dim();
  require(u.size() == d && g_f.size() == d, "pullback: dim(u) and dim(g_f) must equal d");
  FlatGradient g{Vector(g_f.begin(), g_f.end())};
  g.values.resize(params.param_count());
  double* out = g.values.data() + d;
  switch (params.family()) {
    case Family::kMeanField:
      for (std::size_t i = 0; i < d; ++i)
        out[i] = g_f[i] * u[i] * params.conditioner()(params.s()[i]).derivative;
      break;
    case Family::kCholesky:
      for (std::size_t i = 0; i < d; ++i)
        out[i] = g_f[i] * u[i] * params.conditioner()(params.s()[i]).derivative;
      out += d;
      for (std::size_t i = 1; i < d; ++i)
        for (std::size_t j = 0; j < i; ++j) *out++ = g_f[i] * u[j];
      break;
    case Family::kSquareRoot:
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) *out++ = g_f[i] * u[j];
      break;
  }
  return g;
}

double pullback_sqnorm_identity(const VariationalParams& params, std::span<const double> u,
                                std::span<const double> g_f) {
  const std::size_t d = params.dim();
  require(u.size() == d && g_f.size() == d, "pullback identity: dim(u) and dim(g_f) must equal d");
  const double gg = norm_sq(g_f);
  switch (params.family()) {
    case Family::kMeanField: {
      double quad = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double dphi = params.conditioner()(params.s()[i]).derivative;
        quad += g_f[i] * g_f[i] * u[i] * u[i] * dphi * dphi;
      }
      return gg + quad;
    }
    case Family::kCholesky: {
      double sigma = 0.0;  // running sum_{j<=i} u_j^2
      double quad_sigma = 0.0;
      double quad_phi = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        sigma += u[i] * u[i];
        const double dphi = params.conditioner()(params.s()[i]).derivative;
        const double gi2 = g_f[i] * g_f[i];
        quad_sigma += gi2 * sigma;
        quad_phi += gi2 * u[i] * u[i] * (dphi * dphi - 1.0);
      }
      return gg + quad_sigma + quad_phi;
    }
    case Family::kSquareRoot:
      return gg * (1.0 + norm_sq(u));
  }
  return gg;
}

double entropy(const VariationalParams& params, const BaseDistribution& dist) {
  const double base = static_cast<double>(params.dim()) * entropy_per_dim(dist);
  if (params.family() == Family::kSquareRoot) return base + logabsdet(params.c_full());
  double logdet = 0.0;
  for (double s : params.s()) {
    const double c = std::abs(params.conditioner()(s).value);
    if (!(c >= 1e-300)) throw NumericalError("entropy: numerically singular scale");
    logdet += std::log(c);
  }
  return base + logdet;
}

FlatGradient entropy_gradient(const VariationalParams& params) {
  const std::size_t d = params.dim();
  FlatGradient g{Vector(params.param_count(), 0.0)};
  if (params.family() == Family::kSquareRoot) {
    const DenseMatrix inv = inverse(params.c_full());
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) g.values[d + i * d + j] = inv(j, i);
    return g;
  }
  for (std::size_t i = 0; i < d; ++i) {
    const auto [value, deriv] = params.conditioner()(params.s()[i]);
    if (value == 0.0) throw NumericalError("entropy gradient: conditioned diagonal is zero");
    g.values[d + i] = deriv / value;
  }
  return g;
}

MatchedParams match_parameterizations(std::span<const double> m, const LowerTriangular& c,
                                      const Conditioner& phi) {
  const std::size_t d = c.dim();
  require(m.size() == d, "match_parameterizations: dim(m) must equal dim(C)");
  Vector s(d);
  for (std::size_t i = 0; i < d; ++i) s[i] = phi.inverse(c(i, i));
  Vector l;
  l.reserve(d * (d - 1) / 2);
  for (std::size_t i = 1; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j) l.push_back(c(i, j));
  Vector mv(m.begin(), m.end());
  return MatchedParams{
      VariationalParams::mean_field(mv, s, phi),
      VariationalParams::cholesky(mv, s, std::move(l), phi),
      VariationalParams::square_root(mv, c.to_dense()),
  };
}

}  // namespace bbvi
