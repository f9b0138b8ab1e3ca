#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bbvi/checks.hpp"
#include "bbvi/experiment.hpp"

using namespace bbvi;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

fs::path temp_file(const std::string& name, const std::string& contents) {
  const fs::path p = fs::temp_directory_path() / ("bbvi_test_" + name);
  std::ofstream(p) << contents;
  return p;
}

ExperimentConfig small_quadratic() {
  ExperimentConfig cfg;
  cfg.d = 5;
  cfg.iterations = 40;
  cfg.eval_every = 10;
  cfg.replications = 100;
  cfg.stepsize = 1e-4;
  return cfg;
}

}  // namespace

TEST(Config, ParsesKeysAndComments) {
  const auto cfg = parse(
      "# comment line\n"
      "target = linreg   # trailing comment\n"
      "family = square-root\n"
      "conditioner = clipped-softplus\n"
      "S = 3.5\n"
      "d = 7\nN = 40\nsigma = 0.5\nlambda = 2\nM = 4\nT = 9\nR = 50\n"
      "eval_every = 3\nseed = 99\nstepsize = 0.01\nstandardize = true\n"
      "dataset_path = data/x.csv\n\n");
  EXPECT_EQ(cfg.target, TargetKind::kLinreg);
  EXPECT_EQ(cfg.family, Family::kSquareRoot);
  EXPECT_EQ(cfg.conditioner, Conditioner::clipped_softplus(3.5));
  EXPECT_EQ(cfg.d, 7u);
  EXPECT_EQ(cfg.n, 40u);
  EXPECT_EQ(cfg.m_samples, 4u);
  EXPECT_EQ(cfg.iterations, 9u);
  EXPECT_EQ(cfg.replications, 50u);
  EXPECT_EQ(cfg.eval_every, 3u);
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_DOUBLE_EQ(*cfg.stepsize, 0.01);
  EXPECT_TRUE(cfg.standardize);
  EXPECT_EQ(cfg.dataset_path->string(), "data/x.csv");
}

TEST(Config, TheoremDeterminesForm) {
  EXPECT_EQ(parse("theorem = kl\n").form, ElboForm::kKl);
  EXPECT_EQ(parse("form = kl\n").theorem, BoundTheorem::kKl);
  EXPECT_EQ(parse("theorem = entropy\n").form, ElboForm::kEntropy);
}

TEST(Config, RejectsInconsistentOrUnknown) {
  EXPECT_THROW(parse("theorem = kl\nform = entropy\n"), ConfigError);
  EXPECT_THROW(parse("theorem = bounded_entropy\n"), ConfigError);  // needs clipped conditioner
  EXPECT_THROW(parse("conditioner = clipped-softplus\n"), ConfigError);  // needs S
  EXPECT_THROW(parse("colour = blue\n"), ConfigError);
  EXPECT_THROW(parse("M = 0\n"), ConfigError);
  EXPECT_THROW(parse("T = 0\n"), ConfigError);
  EXPECT_THROW(parse("d = -3\n"), ConfigError);
  EXPECT_THROW(parse("just some words\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.cfg"), ConfigError);
}

TEST(Config, UnknownKeyNamesLine) {
  try {
    parse("d = 3\n\nbogus = 1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Dataset, ToyFile) {
  std::istringstream in("1,2\n3,4\n5,6\n");
  const Dataset data = parse_csv_dataset(in, false);
  ASSERT_EQ(data.n(), 3u);
  ASSERT_EQ(data.d(), 1u);
  EXPECT_EQ(data.x(2, 0), 5.0);
  EXPECT_EQ(data.y, (Vector{2.0, 4.0, 6.0}));
}

TEST(Dataset, SkipsHeaderRow) {
  std::istringstream in("a,b,target\n1,2,3\n4,5,6\n");
  const Dataset data = parse_csv_dataset(in, false);
  EXPECT_EQ(data.n(), 2u);
  EXPECT_EQ(data.d(), 2u);
}

TEST(Dataset, BadCellNamesRowAndColumn) {
  std::istringstream in("1,2,3\n4,x,6\n");
  try {
    parse_csv_dataset(in, false);
    FAIL();
  } catch (const DatasetError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
  }
}

TEST(Dataset, RaggedAndSingleColumnRejected) {
  std::istringstream ragged("1,2,3\n4,5\n");
  EXPECT_THROW(parse_csv_dataset(ragged, false), DatasetError);
  std::istringstream single("1\n2\n");
  EXPECT_THROW(parse_csv_dataset(single, false), DatasetError);
  EXPECT_THROW(load_csv_dataset("/nonexistent/data.csv", false), DatasetError);
}

TEST(Dataset, StandardizedColumns) {
  Dataset data = synthetic_regression(500, 3, 0.7, 4);
  for (std::size_t i = 0; i < data.n(); ++i) data.x(i, 1) = 5.0 + 3.0 * data.x(i, 1);
  standardize_columns(data);
  for (std::size_t j = 0; j <= data.d(); ++j) {
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < data.n(); ++i) mean += j < data.d() ? data.x(i, j) : data.y[i];
    mean /= data.n();
    for (std::size_t i = 0; i < data.n(); ++i) {
      const double v = (j < data.d() ? data.x(i, j) : data.y[i]) - mean;
      var += v * v;
    }
    var /= data.n();
    EXPECT_LT(std::abs(mean), 1e-12);
    EXPECT_LT(std::abs(var - 1.0), 1e-12);
  }
}

TEST(Dataset, AirfoilShapedFile) {
  std::ostringstream s;
  for (int i = 0; i < 1503; ++i) s << i << ',' << i % 7 << ',' << 0.5 * i << ',' << i % 3 << ',' << -i << ',' << 2 * i << '\n';
  const fs::path p = temp_file("airfoil.csv", s.str());
  const Dataset data = load_csv_dataset(p, false);
  EXPECT_EQ(data.d(), 5u);
  EXPECT_EQ(data.n(), 1503u);
  EXPECT_EQ(data.name, "bbvi_test_airfoil");
  fs::remove(p);
}

TEST(Dataset, SyntheticRoundTrip) {
  const Dataset data = synthetic_regression(20, 3, 0.5, 8);
  EXPECT_EQ(synthetic_regression(20, 3, 0.5, 8).y, data.y);
  std::stringstream ss;
  write_csv_dataset(data, ss);
  const Dataset back = parse_csv_dataset(ss, false);
  EXPECT_EQ(back.x, data.x);
  EXPECT_EQ(back.y, data.y);
}

TEST(Experiment, ZeroStepsizeKeepsInitialPoint) {
  ExperimentConfig cfg = small_quadratic();
  cfg.stepsize = 0.0;
  const auto setup = build_setup(cfg);
  const auto traj = sgd_run(cfg, setup);
  ASSERT_EQ(traj.size(), cfg.iterations + 1);
  for (const auto& p : traj) EXPECT_EQ(p.flat(), traj.front().flat());
  const DenseMatrix c = build_scale(traj.front());
  EXPECT_NEAR(c(0, 0), 1.0, 1e-12);
  EXPECT_EQ(c(1, 0), 0.0);
}

TEST(Experiment, TrajectoriesAreDeterministic) {
  const ExperimentConfig cfg = small_quadratic();
  const auto setup = build_setup(cfg);
  const auto a = sgd_run(cfg, setup);
  const auto b = sgd_run(cfg, build_setup(cfg));
  for (std::size_t t = 0; t < a.size(); ++t) EXPECT_EQ(a[t].flat(), b[t].flat());
  ExperimentConfig other = cfg;
  other.seed = 2;
  EXPECT_NE(sgd_run(other, build_setup(other)).back().flat(), a.back().flat());
}

TEST(Experiment, SgdDecreasesGap) {
  ExperimentConfig cfg;  // d = 20, N = 100, sigma = 0.3, lambda = 8
  cfg.stepsize = 1e-5;
  cfg.iterations = 500;
  const auto setup = build_setup(cfg);
  const auto traj = sgd_run(cfg, setup);
  const double first = exact_elbo(setup.target, traj.front(), setup.dist).value;
  const double last = exact_elbo(setup.target, traj.back(), setup.dist).value;
  EXPECT_LT(last - setup.constants.F_star, first - setup.constants.F_star);
}

TEST(Experiment, DivergenceGuard) {
  ExperimentConfig cfg = small_quadratic();
  cfg.family = Family::kSquareRoot;
  cfg.stepsize = 1.0;
  const auto setup = build_setup(cfg);
  EXPECT_THROW(sgd_run(cfg, setup), std::runtime_error);
}

TEST(Experiment, TraceRecords) {
  const ExperimentConfig cfg = small_quadratic();
  const auto setup = build_setup(cfg);
  const auto records = trace_bounds(cfg, setup, sgd_run(cfg, setup));
  ASSERT_EQ(records.size(), cfg.iterations / cfg.eval_every + 1);
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    EXPECT_EQ(r.t, k * cfg.eval_every);
    EXPECT_EQ(r.bound_b_term, r.grad_f_sqnorm);
    EXPECT_NEAR(r.bound_rhs, r.bound_a_term + r.bound_b_term + r.bound_c_const, 1e-12 * r.bound_rhs);
    EXPECT_LE(r.gvar_emp, r.bound_rhs + 3 * r.gvar_se);
    EXPECT_GE(r.f_gap, -1e-9);
    EXPECT_GT(r.kl_qp, 0.0);
  }
}

TEST(Experiment, RecordCountWithUnevenStride) {
  ExperimentConfig cfg = small_quadratic();
  cfg.iterations = 23;
  cfg.eval_every = 5;
  const auto setup = build_setup(cfg);
  EXPECT_EQ(trace_bounds(cfg, setup, sgd_run(cfg, setup)).size(), 5u);
}

TEST(Experiment, TraceCsvHeaderAndRoundTrip) {
  const ExperimentConfig cfg = small_quadratic();
  const auto setup = build_setup(cfg);
  const auto records = trace_bounds(cfg, setup, sgd_run(cfg, setup));
  std::stringstream ss;
  write_trace_csv(records, ss);
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header,
            "t,F_gap,grad_F_sqnorm,gvar_emp,gvar_se,bound_rhs,bound_A_term,bound_B_term,bound_C_const,kl_qp");
  ss.seekg(0);
  EXPECT_EQ(read_trace_csv(ss), records);
}

TEST(Experiment, FormatDoubleRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 1e308}) EXPECT_EQ(std::stod(format_double(x)), x);
}

TEST(Experiment, IdentityDesignConstants) {
  const fs::path p = temp_file("identity.csv", "1,0,0,0\n0,1,0,0\n0,0,1,0\n");
  ExperimentConfig cfg;
  cfg.target = TargetKind::kLinreg;
  cfg.dataset_path = p;
  cfg.sigma = 1.0;
  cfg.lambda = 1.0;
  const ConstantsRow row = cmd_constants(cfg);
  EXPECT_EQ(row.d, 3u);
  EXPECT_EQ(row.n, 3u);
  EXPECT_EQ(row.l_h, 2.0);
  EXPECT_EQ(row.mu_kl, 1.0);
  EXPECT_EQ(row.kappa_cond, 2.0);
  const auto setup = build_setup(cfg);
  EXPECT_EQ(row.a, abc_entropy_form(setup.constants, 3, 3.0, cfg.m_samples, cfg.family).a);
  fs::remove(p);
}

TEST(Experiment, ConstantsOnlyFertility) {
  const ConstantsRow row = constants_from_values("fertility", 9, 100, 1.840e3, 5.017e2, 0.0, 0.0, 10);
  EXPECT_NEAR(row.a, 1.620e4, 0.005 * 1.620e4);
  EXPECT_NEAR(row.kappa_cond, 1.840e3 / 5.017e2, 1e-12);
  std::ostringstream out;
  write_constants_csv({row}, out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "dataset,d,N,L_H,mu_KL,kappa_cond,statdist_sq,A,C");
}

TEST(Experiment, ParameterizationComparison) {
  ExperimentConfig cfg;
  cfg.target = TargetKind::kLinreg;
  cfg.d = 4;
  cfg.n = 60;
  cfg.sigma = 1.0;
  cfg.lambda = 1.0;
  cfg.iterations = 30;
  cfg.eval_every = 10;
  cfg.replications = 200;
  cfg.stepsize = 1e-3;
  const auto records = cmd_compare_parameterizations(cfg);
  ASSERT_EQ(records.size(), 4u);
  for (const auto& r : records) {
    EXPECT_GE(r.square_root.second_moment, r.linear_cholesky.second_moment);
    EXPECT_GE(r.linear_cholesky.second_moment, r.softplus_cholesky.second_moment);
  }
  const auto again = cmd_compare_parameterizations(cfg);
  EXPECT_EQ(again.back().softplus_cholesky, records.back().softplus_cholesky);
}

TEST(ExperimentProperties, TraceRoundTripAndDecomposition) {
  const auto r = check_trace_roundtrip(71);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Verify, ReportIsMachineReadable) {
  std::vector<CheckResult> results{{"a", true, "1e-3", "ok"}, {"b", false, "exact", "bad"}};
  std::ostringstream out;
  write_report_json(results, out);
  const std::string s = out.str();
  EXPECT_NE(s.find("\"passed\": false"), std::string::npos);
  EXPECT_NE(s.find("\"tolerance\": \"1e-3\""), std::string::npos);
}
