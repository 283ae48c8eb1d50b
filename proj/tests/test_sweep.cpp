#include <algorithm>
#include <cmath>
#include <random>

#include "confbound/error.hpp"
#include "confbound/parallel.hpp"
#include "confbound/sweep.hpp"
#include "doctest.h"
#include "oracle.hpp"

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

std::vector<double> marginal_u_oracle(const CategoricalJoint& j) { return oracle::enumerate(j, 0).p_u; }

}  // namespace

TEST_CASE("sample_joint_dirichlet is deterministic and valid") {
  const auto a = sample_joint_dirichlet(0.4, {2, 2, 2}, 77);
  const auto b = sample_joint_dirichlet(0.4, {2, 2, 2}, 77);
  CHECK(a.probs() == b.probs());
  CHECK(a.probs().size() == 8);
  double total = 0.0;
  for (double p : a.probs()) {
    CHECK(p >= 0.0);
    total += p;
  }
  CHECK(std::abs(total - 1.0) < 1e-12);
  CHECK(a.y_levels() == std::vector<double>{0.0, 1.0});
  const auto c = sample_joint_dirichlet(0.4, {2, 2, 2}, 78);
  CHECK(a.probs() != c.probs());
}

TEST_CASE("large concentration approaches the uniform table") {
  const auto j = sample_joint_dirichlet(1e6, {2, 2, 2}, 5);
  for (double p : j.probs()) CHECK(std::abs(p - 0.125) < 1e-2);
  const auto e = oracle::enumerate(j, 0);
  CHECK(tv_distance(e.p_u, e.p_u_given_t) < 1e-2);
}

TEST_CASE("invalid sweep configuration") {
  CHECK(kind_of([] { sample_joint_dirichlet(0.0, {2, 2, 2}, 1); }) == ErrorKind::InvalidConfig);
  CHECK(kind_of([] { sample_joint_dirichlet(-1.0, {2, 2, 2}, 1); }) == ErrorKind::InvalidConfig);
  SweepConfig bad;
  bad.n_samples = 0;
  CHECK(kind_of([&] { run_sweep(bad); }) == ErrorKind::InvalidConfig);
  SweepConfig bad_dims;
  bad_dims.dims = {2, 1, 2};
  CHECK(kind_of([&] { run_sweep(bad_dims); }) == ErrorKind::InvalidConfig);
  SweepConfig bad_t;
  bad_t.t_eval = 2;
  CHECK(kind_of([&] { run_sweep(bad_t); }) == ErrorKind::InvalidConfig);
}

TEST_CASE("single-record sweep matches direct evaluation") {
  SweepConfig cfg;
  cfg.n_samples = 1;
  cfg.base_seed = 42;
  const auto records = run_sweep(cfg);
  REQUIRE(records.size() == 1);
  const auto& r = records.front();
  CHECK(r.index == 0);
  CHECK(r.seed == derive_seed(42, 0));
  const auto j = sample_joint_dirichlet(cfg.dirichlet_alpha, cfg.dims, r.seed);
  const auto e = oracle::enumerate(j, 0);
  CHECK(std::abs(r.bias - std::abs(e.obs - e.do_)) < 1e-12);
  CHECK(std::abs(r.b_ut_1 - 2.0 * tv_distance(e.p_u_given_t, e.p_u)) < 1e-12);
  double sup = 0.0;
  for (double m : e.mean_tu) sup = std::max(sup, std::abs(m - e.obs));
  CHECK(std::abs(r.b_uy_inf - sup) < 1e-12);
  CHECK(r.bound == r.b_ut_1 * r.b_uy_inf);
  CHECK(r == evaluate_record(j, 0, 0, r.seed));

  const auto summary = summarize_sweep(records);
  CHECK(summary.count == 1);
  CHECK(summary.slack_min == r.bound - r.bias);
  CHECK(summary.slack_max == r.bound - r.bias);
  CHECK(summary.slack_mean == r.bound - r.bias);
  std::size_t occupied = 0;
  for (std::size_t c : summary.counts) occupied += c > 0 ? 1 : 0;
  CHECK(occupied == 1);
}

TEST_CASE("sweep output is independent of the worker count") {
  SweepConfig cfg;
  cfg.n_samples = 500;
  cfg.base_seed = 9;
  cfg.dims = {3, 2, 3};
  cfg.workers = 1;
  const auto serial = run_sweep(cfg);
  cfg.workers = 4;
  const auto parallel = run_sweep(cfg);
  CHECK(serial == parallel);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].index == i);
    CHECK(serial[i].seed == derive_seed(9, i));
  }
}

TEST_CASE("summarize_sweep edge cases") {
  CHECK(kind_of([] { summarize_sweep(std::vector<SweepRecord>{}); }) == ErrorKind::EmptyInput);

  std::mt19937_64 rng(12);
  std::vector<SweepRecord> records;
  for (std::size_t i = 0; i < 50; ++i) {
    const auto j = oracle::random_joint(rng, {2, 2, 2}, oracle::Structure::UIndependentOfT);
    records.push_back(evaluate_record(j, 0, i, i));
  }
  const auto summary = summarize_sweep(records);
  for (const auto& r : records) {
    CHECK(r.bias < 1e-12);
    CHECK(r.bound < 1e-12);
  }
  CHECK(summary.dominance_violations == 0);
  CHECK(summary.slack_max < 1e-12);
  const auto doc = to_json(summary);
  CHECK(doc.contains("edges_b_ut_1"));
  CHECK(doc.at("count") == 50);
}

TEST_CASE("binary sweep: dominance, ordering, trend and near-tightness") {
  SweepConfig cfg;
  cfg.base_seed = 2023;
  const auto records = run_sweep(cfg);
  REQUIRE(records.size() == 30000);
  std::size_t violations = 0;
  for (const auto& r : records) {
    if (r.bias > r.bound + 1e-9) ++violations;
    REQUIRE(r.bound == r.b_ut_1 * r.b_uy_inf);
  }
  CHECK(violations == 0);

  const auto summary = summarize_sweep(records, 5);
  CHECK(summary.dominance_violations == 0);
  REQUIRE(summary.order_by_bias.size() == records.size());
  for (std::size_t k = 1; k < summary.order_by_bias.size(); ++k) {
    REQUIRE(records[summary.order_by_bias[k - 1]].bias <= records[summary.order_by_bias[k]].bias);
  }

  // Increasing trend along each sensitivity parameter over well-populated bins.
  auto check_trend = [](const std::vector<double>& means) {
    std::vector<double> finite;
    for (double m : means) {
      if (!std::isnan(m)) finite.push_back(m);
    }
    REQUIRE(finite.size() >= 3);
    for (std::size_t k = 1; k < finite.size(); ++k) CHECK(finite[k] > finite[k - 1]);
  };
  check_trend(summary.mean_bias_by_ut);
  check_trend(summary.mean_bias_by_uy);

  // Near-tight records exist in every bias tercile.
  const std::size_t n = summary.order_by_bias.size();
  for (std::size_t tercile = 0; tercile < 3; ++tercile) {
    bool found = false;
    for (std::size_t k = tercile * n / 3; k < (tercile + 1) * n / 3 && !found; ++k) {
      const auto& r = records[summary.order_by_bias[k]];
      if (r.bias > 0 && (r.bound - r.bias) / r.bias < 0.1) found = true;
    }
    CHECK_MESSAGE(found, "tercile " << tercile);
  }
}

TEST_CASE("categorical sweep with four levels") {
  SweepConfig cfg;
  cfg.n_samples = 3000;
  cfg.dims = {4, 4, 2};
  cfg.base_seed = 3;
  const auto records = run_sweep(cfg);
  std::size_t violations = 0;
  for (const auto& r : records) violations += r.bias > r.bound + 1e-9 ? 1 : 0;
  CHECK(violations == 0);
  CHECK(marginal_u_oracle(sample_joint_dirichlet(0.4, {4, 4, 2}, records[0].seed)).size() == 4);
}
