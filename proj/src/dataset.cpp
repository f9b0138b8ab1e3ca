#include "bbvi/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "bbvi/basedist.hpp"

namespace bbvi {

namespace {

constexpr std::uint64_t kDataTag = 0x64617461;  // "data"

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    cells.push_back(first == std::string::npos ? std::string() : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

std::string format17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

Dataset parse_csv_dataset(std::istream& in, bool standardize, std::string name) {
  std::vector<std::vector<double>> rows;
  std::size_t cols = 0;
  std::string line;
  std::size_t lineno = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_row(line);
    std::vector<double> values(cells.size());
    std::size_t numeric = 0;
    std::size_t bad_col = 0;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (parse_number(cells[j], values[j])) ++numeric;
      else if (bad_col == 0) bad_col = j + 1;
    }
    if (first_content && numeric == 0) {
      first_content = false;
      continue;  // header
    }
    first_content = false;
    if (bad_col != 0)
      throw DatasetError(name + ": row " + std::to_string(lineno) + ", column " +
                         std::to_string(bad_col) + ": non-numeric cell '" + cells[bad_col - 1] + "'");
    if (cols == 0) cols = cells.size();
    if (cells.size() != cols)
      throw DatasetError(name + ": row " + std::to_string(lineno) + " has " +
                         std::to_string(cells.size()) + " columns, expected " + std::to_string(cols));
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw DatasetError(name + ": no data rows");
  if (cols < 2) throw DatasetError(name + ": need at least 2 columns (features and response)");

  Dataset data;
  data.name = std::move(name);
  data.x = DenseMatrix(rows.size(), cols - 1);
  data.y.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j + 1 < cols; ++j) data.x(i, j) = rows[i][j];
    data.y[i] = rows[i][cols - 1];
  }
  if (data.n() < data.d())
    std::cerr << "warning: " << data.name << " has N=" << data.n() << " < d=" << data.d() << "\n";
  if (standardize) standardize_columns(data);
  return data;
}

Dataset load_csv_dataset(const std::filesystem::path& path, bool standardize) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset '" + path.string() + "'");
  return parse_csv_dataset(in, standardize, path.stem().string());
}

void standardize_columns(Dataset& data) {
  const std::size_t n = data.n();
  auto zscore = [&](auto get, const std::string& what) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += get(i);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (get(i) - mean) * (get(i) - mean);
    var /= static_cast<double>(n);
    if (!(var > 0.0)) throw DatasetError(data.name + ": cannot standardize constant " + what);
    const double sd = std::sqrt(var);
    for (std::size_t i = 0; i < n; ++i) get(i) = (get(i) - mean) / sd;
  };
  for (std::size_t j = 0; j < data.d(); ++j)
    zscore([&](std::size_t i) -> double& { return data.x(i, j); }, "column " + std::to_string(j + 1));
  zscore([&](std::size_t i) -> double& { return data.y[i]; }, "response");
}

Dataset synthetic_regression(std::size_t n, std::size_t d, double noise_sd, std::uint64_t seed) {
  if (n == 0 || d == 0) throw std::invalid_argument("synthetic_regression: N and d must be positive");
  if (!(noise_sd >= 0.0)) throw std::invalid_argument("synthetic_regression: noise_sd must be >= 0");
  RngStream rng(seed, stream_id(kDataTag));
  Dataset data;
  data.name = "synthetic";
  data.x = DenseMatrix(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) data.x(i, j) = rng.normal();
  Vector w(d);
  for (auto& wj : w) wj = rng.normal();
  data.y = matvec(data.x, w);
  for (auto& yi : data.y) yi += noise_sd * rng.normal();
  return data;
}

void write_csv_dataset(const Dataset& data, std::ostream& out) {
  for (std::size_t j = 0; j < data.d(); ++j) out << 'x' << (j + 1) << ',';
  out << "y\n";
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.d(); ++j) out << format17(data.x(i, j)) << ',';
    out << format17(data.y[i]) << '\n';
  }
}

}  // namespace bbvi
