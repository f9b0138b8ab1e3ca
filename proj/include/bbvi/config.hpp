#pragma once

// Plain-text experiment configuration: one `key = value` per line, `#`
// starts a comment.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "bbvi/bounds.hpp"
#include "bbvi/reparam.hpp"
#include "bbvi/targets.hpp"

namespace bbvi {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TargetKind { kQuadratic, kLinreg };

struct ExperimentConfig {
  TargetKind target = TargetKind::kQuadratic;
  Family family = Family::kCholesky;
  Conditioner conditioner = Conditioner::softplus();
  std::optional<double> cap;  // S, clipped-softplus only
  ElboForm form = ElboForm::kEntropy;
  BoundTheorem theorem = BoundTheorem::kEntropy;
  std::size_t d = 20;
  std::size_t n = 100;
  double sigma = 0.3;
  double lambda = 8.0;
  std::size_t m_samples = 10;
  std::size_t iterations = 500;
  std::optional<double> stepsize;  // default 1 / (B L_H)
  std::size_t replications = 1000;
  std::size_t eval_every = 10;
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> dataset_path;
  bool standardize = false;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

Family parse_family(std::string_view s);
Conditioner parse_conditioner(std::string_view s, std::optional<double> cap);
ElboForm parse_form(std::string_view s);
BoundTheorem parse_theorem(std::string_view s);

}  // namespace bbvi
