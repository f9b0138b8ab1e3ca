#include "bbvi/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace bbvi {

namespace {

constexpr double kSingularPivot = 1e-300;
constexpr double kJacobiTol = 1e-12;
constexpr int kJacobiMaxSweeps = 100;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

bool is_lower_triangular(const DenseMatrix& a) {
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (a(i, j) != 0.0) return false;
  return true;
}

bool is_upper_triangular(const DenseMatrix& a) {
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (a(i, j) != 0.0) return false;
  return true;
}

struct LuFactors {
  DenseMatrix lu;
  std::vector<std::size_t> perm;
};

LuFactors lu_decompose(const DenseMatrix& a) {
  require(a.square(), "LU requires a square matrix");
  const std::size_t n = a.rows();
  LuFactors f{a, std::vector<std::size_t>(n)};
  for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;
  DenseMatrix& lu = f.lu;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
    if (!(std::abs(lu(piv, k)) >= kSingularPivot))
      throw NumericalError("numerically singular matrix");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      std::swap(f.perm[k], f.perm[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      lu(i, k) /= lu(k, k);
      const double lik = lu(i, k);
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= lik * lu(k, j);
    }
  }
  return f;
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  require(data_.size() == rows_ * cols_, "entry count must equal rows * cols");
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> diag) {
  DenseMatrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

LowerTriangular::LowerTriangular(std::size_t dim) : dim_(dim), packed_(packed_size(dim), 0.0) {}

LowerTriangular::LowerTriangular(std::size_t dim, std::vector<double> packed)
    : dim_(dim), packed_(std::move(packed)) {
  require(packed_.size() == packed_size(dim_), "packed entry count must be d(d+1)/2");
}

LowerTriangular LowerTriangular::from_dense(const DenseMatrix& a) {
  require(a.square(), "lower-triangular copy needs a square matrix");
  LowerTriangular l(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j <= i; ++j) l(i, j) = a(i, j);
  return l;
}

DenseMatrix LowerTriangular::to_dense() const {
  DenseMatrix m(dim_, dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j <= i; ++j) m(i, j) = (*this)(i, j);
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_sq(std::span<const double> a) { return dot(a, a); }

Vector axpy(double alpha, std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "axpy: size mismatch");
  Vector out(y.begin(), y.end());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += alpha * x[i];
  return out;
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
  return axpy(-1.0, b, a);
}

Vector matvec(const DenseMatrix& a, std::span<const double> x) {
  require(a.cols() == x.size(), "matvec: shape mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

Vector matvec(const LowerTriangular& l, std::span<const double> x) {
  require(l.dim() == x.size(), "matvec: shape mismatch");
  Vector y(l.dim(), 0.0);
  for (std::size_t i = 0; i < l.dim(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j <= i; ++j) s += l(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Vector matvec_transposed(const DenseMatrix& a, std::span<const double> x) {
  require(a.rows() == x.size(), "matvec_transposed: shape mismatch");
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(i, j) * x[i];
  return y;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), "matmul: shape mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

DenseMatrix gram(const DenseMatrix& x) {
  DenseMatrix g(x.cols(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t i = 0; i < x.cols(); ++i) {
      const double xi = x(r, i);
      for (std::size_t j = 0; j <= i; ++j) g(i, j) += xi * x(r, j);
    }
  for (std::size_t i = 0; i < x.cols(); ++i)
    for (std::size_t j = 0; j < i; ++j) g(j, i) = g(i, j);
  return g;
}

DenseMatrix outer_gram(const DenseMatrix& x) {
  DenseMatrix g(x.rows(), x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      g(i, j) = dot(x.row(i), x.row(j));
      g(j, i) = g(i, j);
    }
  return g;
}

DenseMatrix add_scaled_identity(DenseMatrix a, double alpha) {
  require(a.square(), "add_scaled_identity: square matrix required");
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += alpha;
  return a;
}

DenseMatrix scale(DenseMatrix a, double alpha) {
  for (double& v : a.entries()) v *= alpha;
  return a;
}

double trace(const DenseMatrix& a) {
  require(a.square(), "trace: square matrix required");
  double t = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
  return t;
}

double frobenius_norm_sq(const DenseMatrix& a) { return norm_sq(a.entries()); }

double frobenius_norm_sq(const LowerTriangular& a) { return norm_sq(a.packed()); }

bool is_symmetric(const DenseMatrix& a, double tol) {
  if (!a.square()) return false;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const double scale = std::max({1.0, std::abs(a(i, j)), std::abs(a(j, i))});
      if (std::abs(a(i, j) - a(j, i)) > tol * scale) return false;
    }
  return true;
}

Vector sym_eigenvalues(const DenseMatrix& input) {
  require(input.rows() >= 1, "eigenvalues of an empty matrix");
  if (!is_symmetric(input))
    throw std::invalid_argument("sym_eig: matrix is not symmetric within 1e-10");
  const std::size_t n = input.rows();
  DenseMatrix a = input;
  // Symmetrize exactly so rotations act on a symmetric matrix.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));

  const double total = std::sqrt(frobenius_norm_sq(a));
  for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(2.0 * off) <= kJacobiTol * total) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
      }
    }
  }
  Vector eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

EigenExtremes sym_eig_extremes(const DenseMatrix& a) {
  const Vector eig = sym_eigenvalues(a);
  return {eig.front(), eig.back()};
}

LowerTriangular cholesky_spd(const DenseMatrix& a) {
  require(a.square(), "cholesky: square matrix required");
  const std::size_t n = a.rows();
  LowerTriangular l(n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0)) throw NumericalError("cholesky: matrix is not positive definite");
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

Vector cholesky_solve(const LowerTriangular& l, std::span<const double> b) {
  require(l.dim() == b.size(), "cholesky_solve: shape mismatch");
  const std::size_t n = l.dim();
  Vector x(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) x[i] -= l(i, k) * x[k];
    x[i] /= l(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) x[ii] -= l(k, ii) * x[k];
    x[ii] /= l(ii, ii);
  }
  return x;
}

Vector solve_spd(const DenseMatrix& a, std::span<const double> b) {
  return cholesky_solve(cholesky_spd(a), b);
}

double logdet_spd(const DenseMatrix& a) { return 2.0 * logabsdet(cholesky_spd(a)); }

double logabsdet(const LowerTriangular& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.dim(); ++i) {
    const double v = std::abs(c(i, i));
    if (!(v >= kSingularPivot)) throw NumericalError("logabsdet: numerically singular matrix");
    s += std::log(v);
  }
  return s;
}

double logabsdet(const DenseMatrix& c) {
  require(c.square(), "logabsdet: square matrix required");
  if (is_lower_triangular(c) || is_upper_triangular(c)) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.rows(); ++i) {
      const double v = std::abs(c(i, i));
      if (!(v >= kSingularPivot)) throw NumericalError("logabsdet: numerically singular matrix");
      s += std::log(v);
    }
    return s;
  }
  const LuFactors f = lu_decompose(c);
  double s = 0.0;
  for (std::size_t i = 0; i < c.rows(); ++i) s += std::log(std::abs(f.lu(i, i)));
  return s;
}

DenseMatrix inverse(const DenseMatrix& a) {
  const LuFactors f = lu_decompose(a);
  const std::size_t n = a.rows();
  DenseMatrix inv(n, n);
  Vector col(n);
  for (std::size_t c = 0; c < n; ++c) {
    // Solve LU x = P e_c.
    for (std::size_t i = 0; i < n; ++i) col[i] = f.perm[i] == c ? 1.0 : 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < i; ++k) col[i] -= f.lu(i, k) * col[k];
    for (std::size_t ii = n; ii-- > 0;) {
      for (std::size_t k = ii + 1; k < n; ++k) col[ii] -= f.lu(ii, k) * col[k];
      col[ii] /= f.lu(ii, ii);
    }
    for (std::size_t i = 0; i < n; ++i) inv(i, c) = col[i];
  }
  return inv;
}

}  // namespace bbvi
