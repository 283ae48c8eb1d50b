#pragma once

// Nuisance models for the calibration pipeline:
//  - logistic propensity model p(T=1|x)
//  - two-headed outcome regressor E[Y|t,x] = h_t(relu(W x + b)) with a
//    shared 10-unit encoder and one affine head per arm
// Both are trained full-batch with Adam on standardized covariates.

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "confbound/dataset.hpp"
#include "json.hpp"

namespace confbound {

inline constexpr Eigen::Index kRepresentationDim = 10;

class CovariateMask {
 public:
  explicit CovariateMask(std::vector<bool> included);

  static CovariateMask all(std::size_t d);
  // Every dimension except j. For d = 1 the result is empty and the models
  // degrade to intercept-only fits.
  static CovariateMask excluding(std::size_t d, std::size_t j);

  std::size_t size() const noexcept { return included_.size(); }
  std::size_t count() const noexcept { return indices_.size(); }
  bool includes(std::size_t k) const { return included_.at(k); }
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  const std::vector<bool>& included() const noexcept { return included_; }

  // Selected columns of a full-width matrix.
  Eigen::MatrixXd select(const Eigen::MatrixXd& x) const;

 private:
  std::vector<bool> included_;
  std::vector<std::size_t> indices_;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 5000;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct TrainingMeta {
  std::size_t epochs = 0;
  double initial_loss = 0.0;  // after the first step
  double final_loss = 0.0;
};

// Column-wise affine map fitted on training data; zero-variance columns are
// centered but not scaled.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

class Adam {
 public:
  Adam(Eigen::Index size, const TrainConfig& config);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  Eigen::VectorXd m_, v_;
  double beta1_pow_ = 1.0;
  double beta2_pow_ = 1.0;
};

// Mean binary cross-entropy of sigmoid(z w + b) against t.
// Parameter layout: [w_0 .. w_{k-1}, b].
class PropensityLoss {
 public:
  PropensityLoss(Eigen::MatrixXd z, Eigen::VectorXd t);
  double operator()(const Eigen::VectorXd& params, Eigen::VectorXd* grad) const;
  Eigen::Index parameter_count() const { return z_.cols() + 1; }

 private:
  Eigen::MatrixXd z_;
  Eigen::VectorXd t_;
};

// Per-arm mean squared error, summed over the two arms; each row only
// reaches the head of its own arm.
// Parameter layout (column-major W): [W (H x k), b (H), v0 (H), c0, v1 (H), c1].
class OutcomeLoss {
 public:
  OutcomeLoss(Eigen::MatrixXd z, std::vector<int> t, Eigen::VectorXd y);
  double operator()(const Eigen::VectorXd& params, Eigen::VectorXd* grad) const;
  Eigen::Index parameter_count() const;

 private:
  Eigen::MatrixXd z_;
  std::vector<int> t_;
  Eigen::VectorXd y_;
  Eigen::VectorXd row_weight_;
};

class PropensityModel {
 public:
  PropensityModel(Eigen::VectorXd weights, double bias, CovariateMask mask,
                  Standardizer standardizer, TrainConfig config = {}, TrainingMeta meta = {});

  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  double bias() const noexcept { return bias_; }
  const CovariateMask& mask() const noexcept { return mask_; }
  const Standardizer& standardizer() const noexcept { return standardizer_; }
  const TrainConfig& config() const noexcept { return config_; }
  const TrainingMeta& meta() const noexcept { return meta_; }

  // p(T=1|x) for full-width raw rows.
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
  double predict(const Eigen::VectorXd& x) const;

 private:
  Eigen::VectorXd weights_;
  double bias_;
  CovariateMask mask_;
  Standardizer standardizer_;
  TrainConfig config_;
  TrainingMeta meta_;
};

class OutcomeModel {
 public:
  OutcomeModel(Eigen::VectorXd params, CovariateMask mask, Standardizer standardizer,
               TrainConfig config = {}, TrainingMeta meta = {});

  const Eigen::VectorXd& params() const noexcept { return params_; }
  const CovariateMask& mask() const noexcept { return mask_; }
  const Standardizer& standardizer() const noexcept { return standardizer_; }
  const TrainConfig& config() const noexcept { return config_; }
  const TrainingMeta& meta() const noexcept { return meta_; }

  // Encoder output relu(W z + b) for full-width raw rows (N x H).
  Eigen::MatrixXd represent(const Eigen::MatrixXd& x) const;
  // E[Y|t,x] for full-width raw rows.
  Eigen::VectorXd predict(const Eigen::MatrixXd& x, int t) const;
  double predict(const Eigen::VectorXd& x, int t) const;
  // Both heads on a shared encoder pass; column t holds E[Y|t,x].
  Eigen::MatrixXd predict_arms(const Eigen::MatrixXd& x) const;

 private:
  Eigen::VectorXd params_;
  CovariateMask mask_;
  Standardizer standardizer_;
  TrainConfig config_;
  TrainingMeta meta_;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initial parameters.
Eigen::VectorXd initial_propensity_params(Eigen::Index k, std::uint64_t seed);
Eigen::VectorXd initial_outcome_params(Eigen::Index k, std::uint64_t seed);

PropensityModel fit_propensity(const TabularDataset& data, const CovariateMask& mask,
                               const TrainConfig& config);
OutcomeModel fit_outcome(const TabularDataset& data, const CovariateMask& mask,
                         const TrainConfig& config);

double predict_propensity(const PropensityModel& model, const Eigen::VectorXd& x);
double predict_outcome(const OutcomeModel& model, const Eigen::VectorXd& x, int t);

nlohmann::json to_json(const PropensityModel& model);
nlohmann::json to_json(const OutcomeModel& model);
PropensityModel propensity_from_json(const nlohmann::json& doc);
OutcomeModel outcome_from_json(const nlohmann::json& doc);

}  // namespace confbound
