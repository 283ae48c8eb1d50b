#include <filesystem>

#include "confbound/error.hpp"
#include "confbound/pipeline.hpp"
#include "confbound/sweep.hpp"
#include "confbound/text_io.hpp"
#include "doctest.h"

using namespace confbound;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::IoError;
}

std::filesystem::path scratch(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("confbound_test_" + name);
}

}  // namespace

TEST_CASE("sweep records round-trip byte for byte") {
  SweepConfig cfg;
  cfg.n_samples = 200;
  cfg.base_seed = 7;
  const auto records = run_sweep(cfg);
  const auto path = scratch("sweep.csv");
  emit_results(records, path.string());
  const std::string text = read_text(path.string());
  CHECK(text.rfind("index,seed,bias,b_ut_1,b_uy_inf,bound\n", 0) == 0);
  const auto back = parse_sweep_csv(text);
  CHECK(back == records);
  CHECK(sweep_csv(back) == text);
  std::filesystem::remove(path);
}

TEST_CASE("metric curves round-trip") {
  const std::vector<double> truths{1.0, 0.2}, centers{0.5, 0.1}, widths{0.3, 0.05};
  const auto curve = metric_curve(truths, centers, widths, default_ate_alphas());
  const std::string text = metric_csv(curve);
  const auto back = parse_metric_csv(text);
  REQUIRE(back.size() == curve.size());
  for (std::size_t k = 0; k < curve.size(); ++k) {
    CHECK(back[k].alpha == curve[k].alpha);
    CHECK(back[k].inclusion_rate == curve[k].inclusion_rate);
    CHECK(back[k].zero_crossing_rate == curve[k].zero_crossing_rate);
    CHECK(back[k].stderr_ir == curve[k].stderr_ir);
    CHECK(back[k].stderr_zc == curve[k].stderr_zc);
  }
  CHECK(metric_csv(back) == text);

  const auto no_truth = metric_curve({}, centers, widths, default_ate_alphas());
  const auto back_nt = parse_metric_csv(metric_csv(no_truth));
  CHECK_FALSE(back_nt.front().has_inclusion);
  CHECK(metric_csv(back_nt) == metric_csv(no_truth));
}

TEST_CASE("empty curve gives a header-only file") {
  CHECK(metric_csv({}) == "alpha,ir,zc,stderr_ir,stderr_zc\n");
  const auto path = scratch("empty_curve.csv");
  emit_results(MetricCurve{}, path.string());
  CHECK(read_text(path.string()) == "alpha,ir,zc,stderr_ir,stderr_zc\n");
  CHECK(parse_metric_csv(read_text(path.string())).empty());
  std::filesystem::remove(path);
}

TEST_CASE("interval rows") {
  const std::vector<IntervalRow> rows{{"3", 0.5, 0.2, 0.3, 0.7}};
  CHECK(interval_csv(rows) == "unit_or_rep,tau_igno,half_width,lower,upper\n3,0.5,0.20000000000000001,"
                              "0.29999999999999999,0.69999999999999996\n");
}

TEST_CASE("write failures and malformed input") {
  CHECK(kind_of([] { write_text_atomic("/nonexistent-dir/out.csv", "x"); }) == ErrorKind::IoError);
  CHECK(kind_of([] { emit_results(MetricCurve{}, "/nonexistent-dir/out.csv"); }) == ErrorKind::IoError);
  CHECK(kind_of([] { read_text("/nonexistent-dir/in.csv"); }) == ErrorKind::IoError);
  CHECK(kind_of([] { parse_sweep_csv("index,bias\n"); }) == ErrorKind::SchemaError);
  CHECK(kind_of([] { parse_sweep_csv("index,seed,bias,b_ut_1,b_uy_inf,bound\n1,2,3\n"); }) ==
        ErrorKind::SchemaError);
  CHECK(kind_of([] { parse_metric_csv("alpha,ir,zc,stderr_ir,stderr_zc\n0,x,0,0,0\n"); }) == ErrorKind::ValueError);
}

TEST_CASE("format_double keeps full precision") {
  CHECK(std::stod(format_double(0.1)) == 0.1);
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("JSON reports are written atomically") {
  const auto path = scratch("report.json");
  emit_results(nlohmann::json{{"a", 1}}, path.string());
  CHECK(nlohmann::json::parse(read_text(path.string())).at("a") == 1);
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  std::filesystem::remove(path);
}
