#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "shiftbench/benchmark_runner.hpp"
#include "shiftbench/csv.hpp"
#include "shiftbench/errors.hpp"
#include "shiftbench/serialization.hpp"
#include "support/random.hpp"

namespace shiftbench {
namespace {

TEST(Csv, FormatDoubleRoundTrips) {
  testing::Random rng(5);
  std::vector<double> values{0.1, 1.0 / 3.0, 1e-300, 5e-324, 0.0, 1.0,
                             std::numeric_limits<double>::max()};
  for (int i = 0; i < 1000; ++i) values.push_back(rng.uniform() * std::pow(10.0, rng.index(40) - 20.0));
  for (double v : values) EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v) << format_double(v);
}

TEST(Csv, MatrixRoundTripIsExact) {
  testing::Random rng(6);
  const auto p = rng.posteriors(50, 4, 0.0);
  std::vector<std::string> names{"a", "b", "c", "d"};
  std::ostringstream out;
  write_matrix_csv(out, p.rows(), p.cols(), p.data(), names);
  std::istringstream in(out.str());
  const auto back = read_matrix_csv(in, "mem");
  EXPECT_EQ(back.class_names, names);
  ASSERT_EQ(back.rows, 50u);
  ASSERT_EQ(back.cols, 4u);
  for (std::size_t k = 0; k < back.values.size(); ++k) EXPECT_EQ(back.values[k], p.data()[k]);
  EXPECT_EQ(back.row_lines.front(), 2u);
}

TEST(Csv, HeaderlessMatrix) {
  std::istringstream in("0.5,0.5\n0.25,0.75\n");
  const auto m = read_matrix_csv(in, "mem");
  EXPECT_TRUE(m.class_names.empty());
  EXPECT_EQ(m.rows, 2u);
  EXPECT_EQ(m.row_lines[1], 2u);
}

TEST(Csv, ParseErrorsCarryLine) {
  std::istringstream ragged("a,b\n0.5,0.5\n0.5\n");
  try {
    read_matrix_csv(ragged, "f.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("f.csv:3"), std::string::npos) << e.what();
  }
  std::istringstream junk("0.5,0.5\n0.5,x\n");
  try {
    read_matrix_csv(junk, "g.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("g.csv:2"), std::string::npos) << e.what();
  }
}

TEST(Csv, LabelsByIndexOrName) {
  std::istringstream idx("0\n2\n1\n");
  EXPECT_EQ(read_labels_csv(idx, "l"), (std::vector<std::size_t>{0, 2, 1}));
  std::vector<std::string> names{"cat", "dog"};
  std::istringstream named("label\ndog\ncat\n");
  EXPECT_EQ(read_labels_csv(named, "l", names), (std::vector<std::size_t>{1, 0}));
  std::istringstream bad("0\nbird\n");
  EXPECT_THROW(read_labels_csv(bad, "l", names), Error);
}

TEST(Csv, LabelsRoundTrip) {
  std::vector<std::size_t> labels{3, 0, 1, 1, 2};
  std::ostringstream out;
  write_labels_csv(out, labels);
  std::istringstream in(out.str());
  EXPECT_EQ(read_labels_csv(in, "l"), labels);
}

std::string pointer_of(const Json& j) {
  try {
    benchmark_config_from_json(j);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    return e.detail();
  }
  return "";
}

TEST(ConfigJson, RejectsWithPointer) {
  EXPECT_EQ(pointer_of(Json{{"alpahs", {1.0}}}).rfind("/alpahs", 0), 0u);
  EXPECT_EQ(pointer_of(Json{{"alphas", {1.0, "x"}}}).rfind("/alphas/1", 0), 0u);
  EXPECT_EQ(pointer_of(Json{{"runs_per_alpha", "ten"}}).rfind("/runs_per_alpha", 0), 0u);
  EXPECT_EQ(pointer_of(Json{{"estimators", {"cc", "magic"}}}).rfind("/estimators/1", 0), 0u);
}

TEST(ConfigJson, RoundTripKeepsHash) {
  BenchmarkConfig cfg;
  cfg.alphas = {0.3, 3.0};
  cfg.runs_per_alpha = 7;
  cfg.leip_tau = 0.85;
  cfg.convention = WeightConvention::HardCount;
  cfg.calibrations = {CalibratorKind::Identity, CalibratorKind::Vector};
  const auto back = benchmark_config_from_json(to_json(cfg));
  EXPECT_EQ(config_hash(back), config_hash(cfg));
  EXPECT_EQ(to_json(back), to_json(cfg));
  BenchmarkConfig other = cfg;
  other.runs_per_alpha = 8;
  EXPECT_NE(config_hash(other), config_hash(cfg));
}

TEST(CalibratorJson, RoundTrip) {
  const std::vector<Calibrator> all{
      Calibrator::identity(), Calibrator::temperature(1.7),
      Calibrator::bias_corrected_temperature(0.9, {0.1, -0.2, 0.3}),
      Calibrator::vector({1.1, 0.9, 1.3}, {0.0, 0.5, -0.5}),
      Calibrator::no_bias_vector({2.0, 1.0, 0.5})};
  for (const auto& c : all) {
    const auto back = calibrator_from_json(to_json(c));
    EXPECT_EQ(back.kind(), c.kind());
    EXPECT_EQ(back.temperature(), c.temperature());
    EXPECT_EQ(back.scale(), c.scale());
    EXPECT_EQ(back.bias(), c.bias());
  }
  EXPECT_THROW(calibrator_from_json(Json{{"kind", "ts"}, {"temp", 1.0}}), Error);
}

TEST(OracleJson, RoundTrip) {
  const auto o = GaussianOracle::simplex(4, 2.5, 0.7, validate_simplex({0.1, 0.2, 0.3, 0.4}));
  const auto back = oracle_from_json(to_json(o));
  EXPECT_EQ(back.means(), o.means());
  EXPECT_EQ(back.variance(), o.variance());
  EXPECT_EQ(back.prior().to_vector(), o.prior().to_vector());
}

TEST(ReportJson, ScaleNoteAndCsvHeader) {
  BenchmarkConfig cfg;
  cfg.alphas = {1.0};
  cfg.runs_per_alpha = 2;
  cfg.estimators = {EstimatorKind::CC};
  cfg.validation_size = 500;
  const auto report = run_benchmark(
      cfg, OracleSource{GaussianOracle::simplex(3, 3.0, 1.0, ProbabilitySimplex::uniform(3)), 2000});
  const auto j = to_json(report);
  EXPECT_TRUE(j.contains("mse_scale_note"));
  const auto& cell = j["cells"][0];
  EXPECT_DOUBLE_EQ(cell["mean_mse_x1e3"].get<double>(), cell["mean_mse"].get<double>() * 1e3);
  const auto csv = report_csv(report);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "alpha,run,estimator,calibration,mse,n_test,tau_used");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

}  // namespace
}  // namespace shiftbench
