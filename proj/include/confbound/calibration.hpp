#pragma once

// Calibrated sensitivity parameters from observed data.
//
// ATE: the treatment parameter is twice a Monte Carlo estimate of
// TV[p(X), p(X|t)]; the outcome parameter is the largest gap between the
// arm mean and the outcome model over dataset rows.
//
// CATE: each observed covariate j in turn plays the hidden confounder. The
// models refit without j give p(t|x^(-j)) and E[Y|t,x^(-j)], and the
// largest per-j discrepancy stands in for the unobserved one.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "confbound/dataset.hpp"
#include "confbound/models.hpp"
#include "json.hpp"

namespace confbound {

// Denominators p(t) and p(t|x^(-j)) below this are a positivity failure.
inline constexpr double kRatioFloor = 1e-6;
inline constexpr std::size_t kDefaultHideCap = 30;

struct SensitivityEstimates {
  std::array<double, 2> b_ut_hat{0.0, 0.0};
  std::array<double, 2> b_uy_hat{0.0, 0.0};
};

// Sum over both arms of b_ut_hat * b_uy_hat.
double half_width(const SensitivityEstimates& estimates);

nlohmann::json to_json(const SensitivityEstimates& estimates);

// Empirical p(t) = (1/N) sum 1(t_i = t).
double arm_frequency(const TabularDataset& data, int t);

// (1/2N) sum_i |1 - p(t|x_i)/p(t)|.
double tv_marginal_estimate(const TabularDataset& data, const PropensityModel& propensity, int t);
double calibrate_b_ut_ate(const TabularDataset& data, const PropensityModel& propensity, int t);
// max over dataset rows of |ybar_t - E[Y|t,x]|.
double calibrate_b_uy_ate(const TabularDataset& data, const OutcomeModel& outcome, int t);

SensitivityEstimates calibrate_ate(const TabularDataset& data, const PropensityModel& propensity,
                                   const OutcomeModel& outcome);

struct CateConfig {
  TrainConfig train;
  // Cap on the number of dimensions refit; nullopt means no cap up to
  // kDefaultHideCap dimensions.
  std::optional<std::size_t> max_hide_dims;
  // Radius for the neighborhood estimate of the conditional TV, in
  // standardized units. nullopt uses the one-sample approximation.
  std::optional<double> neighborhood_epsilon;
  std::size_t workers = 0;
};

// Dimensions to refit: all of them, or the top-K by absolute standardized
// weight of the full propensity model (ties to the lower index), returned
// in increasing index order.
std::vector<std::size_t> select_hide_dims(const PropensityModel& full_propensity,
                                          std::optional<std::size_t> max_hide_dims);

// Full models, per-dimension reduced models and per-dimension unique values
// for one training dataset. Keeps a reference to the dataset, which must
// outlive it.
class CateModels {
 public:
  CateModels(const TabularDataset& data, PropensityModel full_propensity, OutcomeModel full_outcome,
             std::vector<std::size_t> scanned,
             std::vector<std::optional<PropensityModel>> reduced_propensity,
             std::vector<std::optional<OutcomeModel>> reduced_outcome,
             std::optional<double> neighborhood_epsilon = std::nullopt);

  std::size_t dims() const noexcept { return data_->dims(); }
  const TabularDataset& data() const noexcept { return *data_; }
  const PropensityModel& full_propensity() const noexcept { return full_propensity_; }
  const OutcomeModel& full_outcome() const noexcept { return full_outcome_; }
  const std::vector<std::size_t>& scanned() const noexcept { return scanned_; }
  bool is_scanned(std::size_t j) const;
  const PropensityModel& reduced_propensity(std::size_t j) const;
  const OutcomeModel& reduced_outcome(std::size_t j) const;
  const std::vector<double>& unique_values(std::size_t j) const { return unique_values_.at(j); }
  const std::optional<double>& neighborhood_epsilon() const noexcept { return epsilon_; }
  const Standardizer& covariate_standardizer() const noexcept { return standardizer_; }
  const Eigen::MatrixXd& standardized_covariates() const noexcept { return standardized_; }

 private:
  const TabularDataset* data_;
  PropensityModel full_propensity_;
  OutcomeModel full_outcome_;
  std::vector<std::size_t> scanned_;
  std::vector<std::optional<PropensityModel>> reduced_propensity_;
  std::vector<std::optional<OutcomeModel>> reduced_outcome_;
  std::vector<std::vector<double>> unique_values_;
  std::optional<double> epsilon_;
  Standardizer standardizer_;
  Eigen::MatrixXd standardized_;
};

// Seeds: full propensity derive_seed(seed, 1), full outcome
// derive_seed(seed, 2), reduced models derive_seed(derive_seed(seed, 3|4), j).
CateModels fit_cate_models(const TabularDataset& data, const CateConfig& config);

struct CateContext {
  const CateModels& models;
  Eigen::VectorXd x;
};

// max over observed values v of x_j of
// |mu_t(x with x_j = v) - E[Y|t, x^(-j)]|.
double rho_j(const CateContext& ctx, std::size_t j, int t);
// |1 - p(t|x) / p(t|x^(-j))|, i.e. twice the one-sample conditional TV.
double ratio_term_j(const CateContext& ctx, std::size_t j, int t);
// TV[p(X_j|x^(-j)), p(X_j|x^(-j),t)] averaged over dataset rows whose
// x^(-j) lies within epsilon of the query (standardized Euclidean norm).
// With no neighbor in range it falls back to the one-sample value.
double conditional_tv_neighborhood(const CateContext& ctx, std::size_t j, int t, double epsilon);

double calibrate_b_uy_cate(const CateContext& ctx, int t);
double calibrate_b_ut_cate(const CateContext& ctx, int t);

struct CateSampleEstimate {
  double tau_igno = 0.0;
  SensitivityEstimates estimates;
  std::array<std::size_t, 2> argmax_ut{0, 0};
  std::array<std::size_t, 2> argmax_uy{0, 0};
  // Per scanned dimension (same order as CateModels::scanned()), per arm.
  std::vector<std::array<double, 2>> rho;
  std::vector<std::array<double, 2>> ratio;
};

CateSampleEstimate estimate_cate_sample(const CateModels& models, const Eigen::VectorXd& x);

nlohmann::json to_json(const CateSampleEstimate& estimate, const std::vector<std::size_t>& scanned);

}  // namespace confbound
