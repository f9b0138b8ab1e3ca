#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "bbvi/linalg.hpp"

namespace bbvi {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  DenseMatrix x;  // N x d
  Vector y;       // N
  std::string name;

  std::size_t n() const { return x.rows(); }
  std::size_t d() const { return x.cols(); }
};

/// Reads a numeric CSV; the last column is the response. A first row with no
/// numeric cells is treated as a header. With `standardize`, every column of X
/// and y is z-scored (population variance). Constant columns are rejected
/// when standardizing.
Dataset load_csv_dataset(const std::filesystem::path& path, bool standardize);
Dataset parse_csv_dataset(std::istream& in, bool standardize, std::string name = "stream");

/// Z-scores columns in place.
void standardize_columns(Dataset& data);

/// Gaussian design, weights w ~ N(0, I), responses y = X w + noise_sd * eps.
Dataset synthetic_regression(std::size_t n, std::size_t d, double noise_sd, std::uint64_t seed);

/// Writes X | y as CSV with 17 significant digits and an x1..xd,y header.
void write_csv_dataset(const Dataset& data, std::ostream& out);

}  // namespace bbvi
