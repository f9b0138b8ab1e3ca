#pragma once

// Small dense linear algebra: row-major matrices, packed lower-triangular
// factors, Jacobi symmetric eigenvalues, Cholesky, LU log-determinants.
// Sized for d up to a few hundred.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bbvi {

using Vector = std::vector<double>;

/// Raised when a factorization or determinant hits a numerical failure
/// (non-positive pivot, singular matrix).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> diag);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> entries() const { return data_; }
  std::span<double> entries() { return data_; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }

  DenseMatrix transpose() const;
  bool all_finite() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Lower-triangular matrix with the diagonal included, packed row by row:
/// (0,0), (1,0), (1,1), (2,0), ...
class LowerTriangular {
 public:
  LowerTriangular() = default;
  explicit LowerTriangular(std::size_t dim);
  LowerTriangular(std::size_t dim, std::vector<double> packed);

  static LowerTriangular from_dense(const DenseMatrix& a);  // copies the lower part
  static std::size_t packed_size(std::size_t dim) { return dim * (dim + 1) / 2; }
  static std::size_t index(std::size_t i, std::size_t j) { return i * (i + 1) / 2 + j; }

  std::size_t dim() const { return dim_; }
  double& operator()(std::size_t i, std::size_t j) { return packed_[index(i, j)]; }
  double operator()(std::size_t i, std::size_t j) const {
    return j > i ? 0.0 : packed_[index(i, j)];
  }
  std::span<const double> packed() const { return packed_; }

  DenseMatrix to_dense() const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> packed_;
};

// Vector helpers.
double dot(std::span<const double> a, std::span<const double> b);
double norm_sq(std::span<const double> a);
Vector axpy(double alpha, std::span<const double> x, std::span<const double> y);  // alpha*x + y
Vector subtract(std::span<const double> a, std::span<const double> b);

// Matrix products.
Vector matvec(const DenseMatrix& a, std::span<const double> x);
Vector matvec(const LowerTriangular& l, std::span<const double> x);
Vector matvec_transposed(const DenseMatrix& a, std::span<const double> x);  // A^T x
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix gram(const DenseMatrix& x);  // X^T X
DenseMatrix outer_gram(const DenseMatrix& x);  // X X^T
DenseMatrix add_scaled_identity(DenseMatrix a, double alpha);
DenseMatrix scale(DenseMatrix a, double alpha);
double trace(const DenseMatrix& a);

double frobenius_norm_sq(const DenseMatrix& a);
double frobenius_norm_sq(const LowerTriangular& a);

bool is_symmetric(const DenseMatrix& a, double tol = 1e-10);

struct EigenExtremes {
  double min;
  double max;
};

/// All eigenvalues of a symmetric matrix in ascending order, by cyclic
/// Jacobi rotations (sweep tolerance 1e-12, at most 100 sweeps).
Vector sym_eigenvalues(const DenseMatrix& a);
EigenExtremes sym_eig_extremes(const DenseMatrix& a);

/// Throws NumericalError("not positive definite") on a non-positive pivot.
LowerTriangular cholesky_spd(const DenseMatrix& a);
Vector solve_spd(const DenseMatrix& a, std::span<const double> b);
Vector cholesky_solve(const LowerTriangular& l, std::span<const double> b);
double logdet_spd(const DenseMatrix& a);

/// log|det C|. Triangular input sums log|C_ii|; dense input factors with
/// partial-pivoting LU. Any pivot below 1e-300 in magnitude throws
/// NumericalError("numerically singular").
double logabsdet(const LowerTriangular& c);
double logabsdet(const DenseMatrix& c);

/// General inverse through LU with partial pivoting.
DenseMatrix inverse(const DenseMatrix& a);

}  // namespace bbvi
