#pragma once

// End-to-end ATE and CATE interval pipelines over tabular data.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "confbound/calibration.hpp"
#include "confbound/dataset.hpp"
#include "confbound/intervals.hpp"
#include "confbound/models.hpp"
#include "confbound/text_io.hpp"
#include "json.hpp"

namespace confbound {

struct AteConfig {
  std::optional<std::size_t> hide_col;
  std::vector<double> alphas = default_ate_alphas();
  TrainConfig train;  // train.seed is the run seed
  std::size_t workers = 0;
};

struct AteReplication {
  int replication = 0;
  bool skipped = false;
  std::string skip_reason;
  double tau_igno = 0.0;
  SensitivityEstimates estimates;
  double half_width = 0.0;
  std::optional<double> true_ate;
  TrainingMeta propensity_meta;
  TrainingMeta outcome_meta;
};

struct AteResult {
  std::vector<AteReplication> replications;
  MetricCurve curve;
  std::size_t skipped = 0;
};

// Per replication r (position in the input), models train with seeds
// derive_seed(derive_seed(seed, r), 1) for propensity and (.., 2) for
// outcome. Single-arm replications are skipped; if every replication is
// skipped the run fails with SingleArmDataset.
AteResult run_ate_pipeline(const std::vector<TabularDataset>& datasets, const AteConfig& config);

struct CatePipelineConfig {
  std::optional<std::size_t> hide_col;
  std::vector<double> alphas = default_cate_alphas();
  CateConfig cate;
};

struct CateUnit {
  std::size_t index = 0;
  double tau_igno = 0.0;
  double half_width = 0.0;
  std::optional<double> true_cate;
  CateSampleEstimate estimate;
};

struct CateResult {
  int replication = 0;
  std::vector<std::size_t> scanned;
  std::vector<CateUnit> units;
  MetricCurve curve;
  TrainingMeta propensity_meta;
  TrainingMeta outcome_meta;
};

// Throws DegenerateDenominator listing every (sample, dimension) pair whose
// reduced propensity falls below the ratio floor.
CateResult run_cate_pipeline(const TabularDataset& data, const CatePipelineConfig& config);

std::vector<IntervalRow> interval_rows(const AteResult& result);
std::vector<IntervalRow> interval_rows(const CateResult& result);

nlohmann::json calibration_report(const AteResult& result);
nlohmann::json calibration_report(const CateResult& result);

// Metric point closest to alpha; throws EmptyInput on an empty curve.
const MetricPoint& point_at(const MetricCurve& curve, double alpha);

}  // namespace confbound
