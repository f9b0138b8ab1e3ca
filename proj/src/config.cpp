#include "bbvi/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace bbvi {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("config: key '" + key + "' expects a non-negative integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string s = lower(v);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("config: key '" + key + "' expects true/false, got '" + v + "'");
}

}  // namespace

Family parse_family(std::string_view s) {
  const std::string v = lower(std::string(s));
  if (v == "mean-field" || v == "meanfield" || v == "mean_field") return Family::kMeanField;
  if (v == "cholesky") return Family::kCholesky;
  if (v == "square-root" || v == "sqrt" || v == "square_root") return Family::kSquareRoot;
  throw ConfigError("unknown family '" + std::string(s) + "'");
}

Conditioner parse_conditioner(std::string_view s, std::optional<double> cap) {
  const std::string v = lower(std::string(s));
  if (v == "identity" || v == "linear") return Conditioner::identity();
  if (v == "softplus") return Conditioner::softplus();
  if (v == "exp") return Conditioner::exp();
  if (v == "clipped-softplus" || v == "clipped_softplus") {
    if (!cap) throw ConfigError("clipped-softplus conditioner requires S");
    if (!(*cap > 0.0)) throw ConfigError("S must be positive");
    return Conditioner::clipped_softplus(*cap);
  }
  throw ConfigError("unknown conditioner '" + std::string(s) + "'");
}

ElboForm parse_form(std::string_view s) {
  const std::string v = lower(std::string(s));
  if (v == "entropy") return ElboForm::kEntropy;
  if (v == "kl") return ElboForm::kKl;
  throw ConfigError("unknown form '" + std::string(s) + "'");
}

BoundTheorem parse_theorem(std::string_view s) {
  const std::string v = lower(std::string(s));
  if (v == "entropy") return BoundTheorem::kEntropy;
  if (v == "kl") return BoundTheorem::kKl;
  if (v == "bounded_entropy" || v == "bounded-entropy") return BoundTheorem::kBoundedEntropy;
  throw ConfigError("unknown theorem '" + std::string(s) + "'");
}

void ExperimentConfig::validate() const {
  if (m_samples < 1) throw ConfigError("M must be >= 1");
  if (iterations < 1) throw ConfigError("T must be >= 1");
  if (replications < 2) throw ConfigError("R must be >= 2");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (d < 1) throw ConfigError("d must be >= 1");
  if (!(sigma > 0.0) || !(lambda > 0.0)) throw ConfigError("sigma and lambda must be positive");
  if (target == TargetKind::kQuadratic && !(n > 0)) throw ConfigError("N must be positive");
  if (target == TargetKind::kLinreg && !dataset_path && n < 1)
    throw ConfigError("synthetic linreg needs N >= 1");
  const bool kl_theorem = theorem == BoundTheorem::kKl;
  if (kl_theorem != (form == ElboForm::kKl))
    throw ConfigError("theorem '" + std::string(theorem_name(theorem)) +
                      "' does not match form '" + std::string(form_name(form)) + "'");
  if (theorem == BoundTheorem::kBoundedEntropy &&
      conditioner.kind() != Conditioner::Kind::kClippedSoftplus)
    throw ConfigError("theorem bounded_entropy requires the clipped-softplus conditioner");
  if (stepsize && !(*stepsize >= 0.0)) throw ConfigError("stepsize must be >= 0");
}

ExperimentConfig parse_config(std::istream& in) {
  std::map<std::string, std::pair<std::string, int>> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = lower(trim(std::string_view(body).substr(0, eq)));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (value.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty value for '" + key + "'");
    kv[key] = {value, lineno};
  }

  static const char* kKeys[] = {"target", "family",  "conditioner", "s",          "form",
                                "d",      "n",       "sigma",       "lambda",     "m",
                                "t",      "stepsize", "r",          "eval_every", "seed",
                                "dataset_path", "standardize", "theorem"};
  for (const auto& [key, v] : kv)
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys))
      throw ConfigError("config line " + std::to_string(v.second) + ": unknown key '" + key + "'");

  ExperimentConfig cfg;
  auto get = [&](const char* key) -> const std::string* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second.first;
  };
  if (auto v = get("target")) {
    const std::string t = lower(*v);
    if (t == "quadratic") cfg.target = TargetKind::kQuadratic;
    else if (t == "linreg") cfg.target = TargetKind::kLinreg;
    else throw ConfigError("unknown target '" + *v + "'");
  }
  if (auto v = get("family")) cfg.family = parse_family(*v);
  if (auto v = get("s")) cfg.cap = to_double("S", *v);
  if (auto v = get("conditioner")) cfg.conditioner = parse_conditioner(*v, cfg.cap);
  const auto* form = get("form");
  const auto* theorem = get("theorem");
  if (form) cfg.form = parse_form(*form);
  if (theorem) cfg.theorem = parse_theorem(*theorem);
  if (theorem && !form)
    cfg.form = cfg.theorem == BoundTheorem::kKl ? ElboForm::kKl : ElboForm::kEntropy;
  if (form && !theorem)
    cfg.theorem = cfg.form == ElboForm::kKl ? BoundTheorem::kKl : BoundTheorem::kEntropy;
  if (auto v = get("d")) cfg.d = to_u64("d", *v);
  if (auto v = get("n")) cfg.n = to_u64("N", *v);
  if (auto v = get("sigma")) cfg.sigma = to_double("sigma", *v);
  if (auto v = get("lambda")) cfg.lambda = to_double("lambda", *v);
  if (auto v = get("m")) cfg.m_samples = to_u64("M", *v);
  if (auto v = get("t")) cfg.iterations = to_u64("T", *v);
  if (auto v = get("stepsize")) cfg.stepsize = to_double("stepsize", *v);
  if (auto v = get("r")) cfg.replications = to_u64("R", *v);
  if (auto v = get("eval_every")) cfg.eval_every = to_u64("eval_every", *v);
  if (auto v = get("seed")) cfg.seed = to_u64("seed", *v);
  if (auto v = get("dataset_path")) cfg.dataset_path = *v;
  if (auto v = get("standardize")) cfg.standardize = to_bool("standardize", *v);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse_config(in);
}

}  // namespace bbvi
