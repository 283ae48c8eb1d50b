#include "confbound/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "confbound/error.hpp"
#include "confbound/parallel.hpp"

namespace confbound {

namespace {

void require_arm(int t) {
  if (t != 0 && t != 1) throw Error(ErrorKind::NonBinaryTreatment, "arm must be 0 or 1");
}

// p(t|x) from a model of p(T=1|x).
double arm_probability(double p1, int t) { return t == 1 ? p1 : 1.0 - p1; }

double arm_mean(const TabularDataset& data, int t) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.treatment()[i] == t) {
      sum += data.y_factual()(static_cast<Eigen::Index>(i));
      ++count;
    }
  }
  if (count == 0) {
    throw Error(ErrorKind::ZeroArmProbability, "no samples in arm " + std::to_string(t));
  }
  return sum / static_cast<double>(count);
}

const CateModels& check_dimension(const CateContext& ctx, std::size_t j) {
  if (j >= ctx.models.dims() || !ctx.models.is_scanned(j)) {
    throw Error(ErrorKind::UnknownDimension, "no reduced models for dimension " + std::to_string(j));
  }
  if (static_cast<std::size_t>(ctx.x.size()) != ctx.models.dims()) {
    throw Error(ErrorKind::DimensionMismatch, "query has " + std::to_string(ctx.x.size()) +
                                                  " covariates, models expect " +
                                                  std::to_string(ctx.models.dims()));
  }
  return ctx.models;
}

// Query row repeated once per observed value of x_j, with x_j replaced.
Eigen::MatrixXd substitute_column(const Eigen::VectorXd& x, std::size_t j, const std::vector<double>& values) {
  Eigen::MatrixXd rows = x.transpose().replicate(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t r = 0; r < values.size(); ++r) {
    rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = values[r];
  }
  return rows;
}

std::array<double, 2> rho_both(const CateModels& models, const Eigen::VectorXd& x, std::size_t j) {
  const Eigen::MatrixXd full = models.full_outcome().predict_arms(
      substitute_column(x, j, models.unique_values(j)));
  const Eigen::MatrixXd reduced = models.reduced_outcome(j).predict_arms(Eigen::MatrixXd(x.transpose()));
  std::array<double, 2> out{};
  for (int t = 0; t < 2; ++t) {
    out[t] = (full.col(t).array() - reduced(0, t)).abs().maxCoeff();
  }
  return out;
}

double checked_denominator(double p1_reduced, int t, std::size_t j) {
  const double den = arm_probability(p1_reduced, t);
  if (den < kRatioFloor) {
    throw Error(ErrorKind::DegenerateDenominator,
                "p(t=" + std::to_string(t) + "|x^(-" + std::to_string(j) + ")) below floor in dimension " +
                    std::to_string(j));
  }
  return den;
}

}  // namespace

double half_width(const SensitivityEstimates& e) {
  return e.b_ut_hat[0] * e.b_uy_hat[0] + e.b_ut_hat[1] * e.b_uy_hat[1];
}

nlohmann::json to_json(const SensitivityEstimates& e) {
  return {{"b_ut_hat", e.b_ut_hat}, {"b_uy_hat", e.b_uy_hat}, {"half_width", half_width(e)}};
}

double arm_frequency(const TabularDataset& data, int t) {
  require_arm(t);
  return static_cast<double>(data.arm_count(t)) / static_cast<double>(data.size());
}

double tv_marginal_estimate(const TabularDataset& data, const PropensityModel& propensity, int t) {
  const double p_t = arm_frequency(data, t);
  if (data.arm_count(t) == 0) {
    throw Error(ErrorKind::ZeroArmProbability, "no samples in arm " + std::to_string(t));
  }
  if (p_t < kRatioFloor) {
    throw Error(ErrorKind::DegenerateDenominator, "p(t=" + std::to_string(t) + ") below floor");
  }
  const Eigen::VectorXd p1 = propensity.predict(data.covariates());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p1.size(); ++i) sum += std::abs(1.0 - arm_probability(p1(i), t) / p_t);
  return sum / (2.0 * static_cast<double>(data.size()));
}

double calibrate_b_ut_ate(const TabularDataset& data, const PropensityModel& propensity, int t) {
  return 2.0 * tv_marginal_estimate(data, propensity, t);
}

double calibrate_b_uy_ate(const TabularDataset& data, const OutcomeModel& outcome, int t) {
  require_arm(t);
  const double mean = arm_mean(data, t);
  return (outcome.predict(data.covariates(), t).array() - mean).abs().maxCoeff();
}

SensitivityEstimates calibrate_ate(const TabularDataset& data, const PropensityModel& propensity,
                                   const OutcomeModel& outcome) {
  SensitivityEstimates e;
  for (int t = 0; t < 2; ++t) {
    e.b_ut_hat[t] = calibrate_b_ut_ate(data, propensity, t);
    e.b_uy_hat[t] = calibrate_b_uy_ate(data, outcome, t);
  }
  return e;
}

std::vector<std::size_t> select_hide_dims(const PropensityModel& full_propensity,
                                          std::optional<std::size_t> max_hide_dims) {
  const std::size_t d = full_propensity.mask().size();
  const std::size_t cap = max_hide_dims.value_or(kDefaultHideCap);
  if (cap == 0) throw Error(ErrorKind::InvalidConfig, "max_hide_dims must be >= 1");
  std::vector<std::size_t> dims(d);
  std::iota(dims.begin(), dims.end(), 0);
  if (d <= cap) return dims;

  // |w_k| for dimensions the model sees; masked-out ones rank last.
  std::vector<double> strength(d, -1.0);
  const auto& idx = full_propensity.mask().indices();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    strength[idx[k]] = std::abs(full_propensity.weights()(static_cast<Eigen::Index>(k)));
  }
  std::stable_sort(dims.begin(), dims.end(),
                   [&](std::size_t a, std::size_t b) { return strength[a] > strength[b]; });
  dims.resize(cap);
  std::sort(dims.begin(), dims.end());
  return dims;
}

CateModels::CateModels(const TabularDataset& data, PropensityModel full_propensity, OutcomeModel full_outcome,
                       std::vector<std::size_t> scanned,
                       std::vector<std::optional<PropensityModel>> reduced_propensity,
                       std::vector<std::optional<OutcomeModel>> reduced_outcome,
                       std::optional<double> neighborhood_epsilon)
    : data_(&data),
      full_propensity_(std::move(full_propensity)),
      full_outcome_(std::move(full_outcome)),
      scanned_(std::move(scanned)),
      reduced_propensity_(std::move(reduced_propensity)),
      reduced_outcome_(std::move(reduced_outcome)),
      epsilon_(neighborhood_epsilon) {
  const std::size_t d = data.dims();
  if (reduced_propensity_.size() != d || reduced_outcome_.size() != d) {
    throw Error(ErrorKind::DimensionMismatch, "reduced model tables must have one slot per dimension");
  }
  if (scanned_.empty()) throw Error(ErrorKind::InvalidConfig, "no dimensions to scan");
  for (std::size_t j : scanned_) {
    if (j >= d || !reduced_propensity_[j] || !reduced_outcome_[j]) {
      throw Error(ErrorKind::UnknownDimension, "missing reduced models for dimension " + std::to_string(j));
    }
    const auto& pm = reduced_propensity_[j]->mask();
    const auto& om = reduced_outcome_[j]->mask();
    if (pm.size() != d || om.size() != d || pm.includes(j) || om.includes(j) || pm.count() != d - 1 ||
        om.count() != d - 1) {
      throw Error(ErrorKind::DimensionMismatch,
                  "reduced models for dimension " + std::to_string(j) + " must exclude exactly that dimension");
    }
  }
  unique_values_.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto col = data.covariates().col(static_cast<Eigen::Index>(j));
    std::vector<double> values(col.data(), col.data() + col.size());
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    unique_values_[j] = std::move(values);
  }
  standardizer_ = Standardizer::fit(data.covariates());
  standardized_ = standardizer_.apply(data.covariates());
}

bool CateModels::is_scanned(std::size_t j) const {
  return std::find(scanned_.begin(), scanned_.end(), j) != scanned_.end();
}

const PropensityModel& CateModels::reduced_propensity(std::size_t j) const {
  if (j >= reduced_propensity_.size() || !reduced_propensity_[j]) {
    throw Error(ErrorKind::UnknownDimension, "no reduced propensity model for dimension " + std::to_string(j));
  }
  return *reduced_propensity_[j];
}

const OutcomeModel& CateModels::reduced_outcome(std::size_t j) const {
  if (j >= reduced_outcome_.size() || !reduced_outcome_[j]) {
    throw Error(ErrorKind::UnknownDimension, "no reduced outcome model for dimension " + std::to_string(j));
  }
  return *reduced_outcome_[j];
}

CateModels fit_cate_models(const TabularDataset& data, const CateConfig& config) {
  const std::size_t d = data.dims();
  TrainConfig prop_cfg = config.train;
  prop_cfg.seed = derive_seed(config.train.seed, 1);
  TrainConfig out_cfg = config.train;
  out_cfg.seed = derive_seed(config.train.seed, 2);
  auto full_prop = fit_propensity(data, CovariateMask::all(d), prop_cfg);
  auto full_out = fit_outcome(data, CovariateMask::all(d), out_cfg);

  auto scanned = select_hide_dims(full_prop, config.max_hide_dims);
  std::vector<std::optional<PropensityModel>> reduced_prop(d);
  std::vector<std::optional<OutcomeModel>> reduced_out(d);
  const std::size_t workers = config.workers == 0 ? default_workers() : config.workers;
  // Task 2s refits the propensity model for scanned[s], task 2s+1 the
  // outcome model.
  parallel_for(
      2 * scanned.size(),
      [&](std::size_t task) {
        const std::size_t j = scanned[task / 2];
        const auto mask = CovariateMask::excluding(d, j);
        TrainConfig cfg = config.train;
        if (task % 2 == 0) {
          cfg.seed = derive_seed(derive_seed(config.train.seed, 3), j);
          reduced_prop[j] = fit_propensity(data, mask, cfg);
        } else {
          cfg.seed = derive_seed(derive_seed(config.train.seed, 4), j);
          reduced_out[j] = fit_outcome(data, mask, cfg);
        }
      },
      workers);
  return CateModels(data, std::move(full_prop), std::move(full_out), std::move(scanned), std::move(reduced_prop),
                    std::move(reduced_out), config.neighborhood_epsilon);
}

double rho_j(const CateContext& ctx, std::size_t j, int t) {
  require_arm(t);
  const auto& models = check_dimension(ctx, j);
  return rho_both(models, ctx.x, j)[t];
}

double ratio_term_j(const CateContext& ctx, std::size_t j, int t) {
  require_arm(t);
  const auto& models = check_dimension(ctx, j);
  const double num = arm_probability(models.full_propensity().predict(ctx.x), t);
  const double den = checked_denominator(models.reduced_propensity(j).predict(ctx.x), t, j);
  return std::abs(1.0 - num / den);
}

double conditional_tv_neighborhood(const CateContext& ctx, std::size_t j, int t, double epsilon) {
  require_arm(t);
  const auto& models = check_dimension(ctx, j);
  if (!(epsilon >= 0.0)) throw Error(ErrorKind::InvalidConfig, "epsilon must be >= 0");
  const double den = checked_denominator(models.reduced_propensity(j).predict(ctx.x), t, j);

  const auto& data = models.data();
  const Eigen::RowVectorXd query = models.covariate_standardizer().apply(Eigen::MatrixXd(ctx.x.transpose())).row(0);
  const Eigen::MatrixXd& z = models.standardized_covariates();
  std::vector<double> neighbor_values;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    Eigen::RowVectorXd diff = z.row(r) - query;
    diff(static_cast<Eigen::Index>(j)) = 0.0;
    if (diff.norm() <= epsilon) {
      neighbor_values.push_back(data.covariates()(r, static_cast<Eigen::Index>(j)));
    }
  }
  if (neighbor_values.empty()) neighbor_values.push_back(ctx.x(static_cast<Eigen::Index>(j)));
  const Eigen::VectorXd p1 = models.full_propensity().predict(substitute_column(ctx.x, j, neighbor_values));
  double sum = 0.0;
  for (Eigen::Index r = 0; r < p1.size(); ++r) sum += std::abs(1.0 - arm_probability(p1(r), t) / den);
  return sum / (2.0 * static_cast<double>(p1.size()));
}

double calibrate_b_uy_cate(const CateContext& ctx, int t) {
  double best = 0.0;
  for (std::size_t j : ctx.models.scanned()) best = std::max(best, rho_j(ctx, j, t));
  return best;
}

double calibrate_b_ut_cate(const CateContext& ctx, int t) {
  double best = 0.0;
  for (std::size_t j : ctx.models.scanned()) {
    const double term = ctx.models.neighborhood_epsilon()
                            ? 2.0 * conditional_tv_neighborhood(ctx, j, t, *ctx.models.neighborhood_epsilon())
                            : ratio_term_j(ctx, j, t);
    best = std::max(best, term);
  }
  return best;
}

CateSampleEstimate estimate_cate_sample(const CateModels& models, const Eigen::VectorXd& x) {
  const CateContext ctx{models, x};
  CateSampleEstimate out;
  const Eigen::MatrixXd arms = models.full_outcome().predict_arms(Eigen::MatrixXd(x.transpose()));
  out.tau_igno = arms(0, 1) - arms(0, 0);
  const double p1 = models.full_propensity().predict(x);
  for (std::size_t s = 0; s < models.scanned().size(); ++s) {
    const std::size_t j = models.scanned()[s];
    check_dimension(ctx, j);
    const auto rho = rho_both(models, x, j);
    const double p1_reduced = models.reduced_propensity(j).predict(x);
    std::array<double, 2> ratio{};
    for (int t = 0; t < 2; ++t) {
      if (models.neighborhood_epsilon()) {
        ratio[t] = 2.0 * conditional_tv_neighborhood(ctx, j, t, *models.neighborhood_epsilon());
      } else {
        ratio[t] = std::abs(1.0 - arm_probability(p1, t) / checked_denominator(p1_reduced, t, j));
      }
      if (s == 0 || rho[t] > out.estimates.b_uy_hat[t]) {
        out.estimates.b_uy_hat[t] = rho[t];
        out.argmax_uy[t] = j;
      }
      if (s == 0 || ratio[t] > out.estimates.b_ut_hat[t]) {
        out.estimates.b_ut_hat[t] = ratio[t];
        out.argmax_ut[t] = j;
      }
    }
    out.rho.push_back(rho);
    out.ratio.push_back(ratio);
  }
  return out;
}

nlohmann::json to_json(const CateSampleEstimate& e, const std::vector<std::size_t>& scanned) {
  nlohmann::json dims = nlohmann::json::array();
  for (std::size_t s = 0; s < scanned.size() && s < e.rho.size(); ++s) {
    dims.push_back({{"dimension", scanned[s]}, {"rho", e.rho[s]}, {"ratio", e.ratio[s]}});
  }
  return {{"tau_igno", e.tau_igno},
          {"estimates", to_json(e.estimates)},
          {"argmax_b_ut", e.argmax_ut},
          {"argmax_b_uy", e.argmax_uy},
          {"per_dimension", dims}};
}

}  // namespace confbound
