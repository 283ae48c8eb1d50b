#include "confbound/pipeline.hpp"

#include <cmath>

#include "confbound/error.hpp"
#include "confbound/parallel.hpp"

namespace confbound {

namespace {

TabularDataset exposed_view(const TabularDataset& data, const std::optional<std::size_t>& hide_col) {
  if (!hide_col) return data;
  return hide_covariate(data, *hide_col).exposed();
}

}  // namespace

AteResult run_ate_pipeline(const std::vector<TabularDataset>& datasets, const AteConfig& config) {
  if (datasets.empty()) throw Error(ErrorKind::EmptyInput, "no replications");
  config.train.validate();
  AteResult result;
  result.replications.resize(datasets.size());
  const std::size_t workers = config.workers == 0 ? default_workers() : config.workers;
  parallel_for(
      datasets.size(),
      [&](std::size_t r) {
        const TabularDataset data = exposed_view(datasets[r], config.hide_col);
        AteReplication& rep = result.replications[r];
        rep.replication = data.replication();
        if (data.has_truth()) rep.true_ate = true_ate(data);
        if (data.arm_count(0) == 0 || data.arm_count(1) == 0) {
          rep.skipped = true;
          rep.skip_reason = "single-arm replication";
          return;
        }
        const std::uint64_t rep_seed = derive_seed(config.train.seed, r);
        TrainConfig prop_cfg = config.train;
        prop_cfg.seed = derive_seed(rep_seed, 1);
        TrainConfig out_cfg = config.train;
        out_cfg.seed = derive_seed(rep_seed, 2);
        const auto mask = CovariateMask::all(data.dims());
        const auto propensity = fit_propensity(data, mask, prop_cfg);
        const auto outcome = fit_outcome(data, mask, out_cfg);
        rep.tau_igno = tau_igno_hat(data);
        rep.estimates = calibrate_ate(data, propensity, outcome);
        rep.half_width = half_width(rep.estimates);
        rep.propensity_meta = propensity.meta();
        rep.outcome_meta = outcome.meta();
      },
      workers);

  std::vector<double> truths, centers, widths;
  bool all_truth = true;
  for (const auto& rep : result.replications) {
    if (rep.skipped) {
      ++result.skipped;
      continue;
    }
    centers.push_back(rep.tau_igno);
    widths.push_back(rep.half_width);
    if (rep.true_ate) {
      truths.push_back(*rep.true_ate);
    } else {
      all_truth = false;
    }
  }
  if (centers.empty()) throw Error(ErrorKind::SingleArmDataset, "every replication has a single arm");
  if (!all_truth) truths.clear();
  result.curve = metric_curve(truths, centers, widths, config.alphas);
  return result;
}

CateResult run_cate_pipeline(const TabularDataset& input, const CatePipelineConfig& config) {
  const TabularDataset data = exposed_view(input, config.hide_col);
  CateResult result;
  result.replication = data.replication();
  const CateModels models = fit_cate_models(data, config.cate);
  result.scanned = models.scanned();
  result.propensity_meta = models.full_propensity().meta();
  result.outcome_meta = models.full_outcome().meta();

  std::string offending;
  std::size_t offending_count = 0;
  for (std::size_t j : models.scanned()) {
    const Eigen::VectorXd p1 = models.reduced_propensity(j).predict(data.covariates());
    for (Eigen::Index i = 0; i < p1.size(); ++i) {
      if (p1(i) < kRatioFloor || 1.0 - p1(i) < kRatioFloor) {
        if (offending_count < 50) offending += " (" + std::to_string(i) + "," + std::to_string(j) + ")";
        ++offending_count;
      }
    }
  }
  if (offending_count > 0) {
    throw Error(ErrorKind::DegenerateDenominator,
                std::to_string(offending_count) + " (sample, dimension) pairs below the ratio floor:" + offending);
  }

  std::optional<Eigen::VectorXd> truth;
  if (data.has_truth()) truth = true_cate(data);
  result.units.resize(data.size());
  const std::size_t workers = config.cate.workers == 0 ? default_workers() : config.cate.workers;
  parallel_for(
      data.size(),
      [&](std::size_t i) {
        const auto row = static_cast<Eigen::Index>(i);
        CateUnit& unit = result.units[i];
        unit.index = i;
        unit.estimate = estimate_cate_sample(models, data.covariates().row(row).transpose());
        unit.tau_igno = unit.estimate.tau_igno;
        unit.half_width = half_width(unit.estimate.estimates);
        if (truth) unit.true_cate = (*truth)(row);
      },
      workers);

  std::vector<double> truths, centers, widths;
  for (const auto& u : result.units) {
    centers.push_back(u.tau_igno);
    widths.push_back(u.half_width);
    if (u.true_cate) truths.push_back(*u.true_cate);
  }
  result.curve = metric_curve(truths, centers, widths, config.alphas);
  return result;
}

std::vector<IntervalRow> interval_rows(const AteResult& result) {
  std::vector<IntervalRow> rows;
  for (const auto& rep : result.replications) {
    if (rep.skipped) continue;
    const EffectInterval iv(rep.tau_igno, rep.half_width, 1.0);
    rows.push_back({std::to_string(rep.replication), rep.tau_igno, rep.half_width, iv.lower(), iv.upper()});
  }
  return rows;
}

std::vector<IntervalRow> interval_rows(const CateResult& result) {
  std::vector<IntervalRow> rows;
  for (const auto& u : result.units) {
    const EffectInterval iv(u.tau_igno, u.half_width, 1.0);
    rows.push_back({std::to_string(u.index), u.tau_igno, u.half_width, iv.lower(), iv.upper()});
  }
  return rows;
}

nlohmann::json calibration_report(const AteResult& result) {
  nlohmann::json reps = nlohmann::json::array();
  for (const auto& rep : result.replications) {
    nlohmann::json entry = {{"replication", rep.replication}, {"skipped", rep.skipped}};
    if (rep.skipped) {
      entry["reason"] = rep.skip_reason;
    } else {
      entry["tau_igno"] = rep.tau_igno;
      entry["estimates"] = to_json(rep.estimates);
      entry["propensity_loss"] = {rep.propensity_meta.initial_loss, rep.propensity_meta.final_loss};
      entry["outcome_loss"] = {rep.outcome_meta.initial_loss, rep.outcome_meta.final_loss};
    }
    if (rep.true_ate) entry["true_ate"] = *rep.true_ate;
    reps.push_back(entry);
  }
  return {{"kind", "ate"}, {"replications", reps}, {"skipped", result.skipped}};
}

nlohmann::json calibration_report(const CateResult& result) {
  nlohmann::json units = nlohmann::json::array();
  for (const auto& u : result.units) {
    auto entry = to_json(u.estimate, result.scanned);
    entry["index"] = u.index;
    if (u.true_cate) entry["true_cate"] = *u.true_cate;
    units.push_back(std::move(entry));
  }
  return {{"kind", "cate"},
          {"replication", result.replication},
          {"scanned_dimensions", result.scanned},
          {"propensity_loss", {result.propensity_meta.initial_loss, result.propensity_meta.final_loss}},
          {"outcome_loss", {result.outcome_meta.initial_loss, result.outcome_meta.final_loss}},
          {"units", units}};
}

const MetricPoint& point_at(const MetricCurve& curve, double alpha) {
  if (curve.empty()) throw Error(ErrorKind::EmptyInput, "empty metric curve");
  const MetricPoint* best = &curve.front();
  for (const auto& p : curve) {
    if (std::abs(p.alpha - alpha) < std::abs(best->alpha - alpha)) best = &p;
  }
  return *best;
}

}  // namespace confbound
