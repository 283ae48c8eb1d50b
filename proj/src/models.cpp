#include "confbound/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "confbound/error.hpp"

namespace confbound {

namespace {

constexpr Eigen::Index H = kRepresentationDim;
// Keeps predicted probabilities strictly inside (0, 1) after rounding.
constexpr double kProbabilityClamp = 1e-15;

double sigmoid(double z) {
  const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return std::clamp(s, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void require_both_arms(const TabularDataset& data) {
  if (data.size() < 2 || data.arm_count(0) == 0 || data.arm_count(1) == 0) {
    throw Error(ErrorKind::SingleArmDataset,
                "need both treatment arms; got " + std::to_string(data.arm_count(1)) +
                    " treated and " + std::to_string(data.arm_count(0)) + " control rows");
  }
}

void require_mask_fits(const CovariateMask& mask, std::size_t d) {
  if (mask.size() != d) {
    throw Error(ErrorKind::DimensionMismatch, "mask covers " + std::to_string(mask.size()) +
                                                  " dimensions, data has " + std::to_string(d));
  }
}

void require_width(const Eigen::MatrixXd& x, const CovariateMask& mask) {
  if (static_cast<std::size_t>(x.cols()) != mask.size()) {
    throw Error(ErrorKind::DimensionMismatch, "expected rows of length " + std::to_string(mask.size()) +
                                                  ", got " + std::to_string(x.cols()));
  }
}

Eigen::VectorXd uniform_block(Eigen::Index size, double fan_in, std::mt19937_64& rng) {
  const double limit = 1.0 / std::sqrt(std::max(fan_in, 1.0));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Eigen::VectorXd out(size);
  for (Eigen::Index i = 0; i < size; ++i) out(i) = dist(rng);
  return out;
}

template <typename Loss>
Eigen::VectorXd train(const Loss& loss, Eigen::VectorXd params, const TrainConfig& config,
                      TrainingMeta& meta) {
  Adam adam(params.size(), config);
  Eigen::VectorXd grad(params.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double value = loss(params, &grad);
    if (epoch == 0) meta.initial_loss = value;
    adam.step(params, grad);
  }
  meta.epochs = config.epochs;
  meta.final_loss = loss(params, nullptr);
  return params;
}

nlohmann::json to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const nlohmann::json& doc) {
  const auto v = doc.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json common_json(const CovariateMask& mask, const Standardizer& s, const TrainConfig& c,
                           const TrainingMeta& m) {
  return {{"mask", mask.included()},
          {"standardizer", {{"mean", to_json(s.mean)}, {"scale", to_json(s.scale)}}},
          {"config",
           {{"learning_rate", c.learning_rate},
            {"epochs", c.epochs},
            {"seed", c.seed},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"epsilon", c.epsilon}}},
          {"meta", {{"epochs", m.epochs}, {"initial_loss", m.initial_loss}, {"final_loss", m.final_loss}}}};
}

struct CommonFields {
  CovariateMask mask;
  Standardizer standardizer;
  TrainConfig config;
  TrainingMeta meta;
};

CommonFields common_from_json(const nlohmann::json& doc) {
  CommonFields f{CovariateMask(doc.at("mask").get<std::vector<bool>>()), {}, {}, {}};
  f.standardizer.mean = vector_from_json(doc.at("standardizer").at("mean"));
  f.standardizer.scale = vector_from_json(doc.at("standardizer").at("scale"));
  const auto& c = doc.at("config");
  f.config.learning_rate = c.at("learning_rate").get<double>();
  f.config.epochs = c.at("epochs").get<std::size_t>();
  f.config.seed = c.at("seed").get<std::uint64_t>();
  f.config.beta1 = c.at("beta1").get<double>();
  f.config.beta2 = c.at("beta2").get<double>();
  f.config.epsilon = c.at("epsilon").get<double>();
  const auto& m = doc.at("meta");
  f.meta.epochs = m.at("epochs").get<std::size_t>();
  f.meta.initial_loss = m.at("initial_loss").get<double>();
  f.meta.final_loss = m.at("final_loss").get<double>();
  if (static_cast<std::size_t>(f.standardizer.mean.size()) != f.mask.count() ||
      f.standardizer.scale.size() != f.standardizer.mean.size()) {
    throw Error(ErrorKind::SchemaError, "standardizer does not match mask");
  }
  return f;
}

}  // namespace

CovariateMask::CovariateMask(std::vector<bool> included) : included_(std::move(included)) {
  for (std::size_t k = 0; k < included_.size(); ++k) {
    if (included_[k]) indices_.push_back(k);
  }
}

CovariateMask CovariateMask::all(std::size_t d) { return CovariateMask(std::vector<bool>(d, true)); }

CovariateMask CovariateMask::excluding(std::size_t d, std::size_t j) {
  if (j >= d) {
    throw Error(ErrorKind::UnknownDimension,
                "dimension " + std::to_string(j) + " out of range for d = " + std::to_string(d));
  }
  std::vector<bool> included(d, true);
  included[j] = false;
  return CovariateMask(std::move(included));
}

Eigen::MatrixXd CovariateMask::select(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(indices_.size()));
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(indices_[k]));
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvalidConfig, "learning_rate must be > 0");
  if (epochs < 1) throw Error(ErrorKind::InvalidConfig, "epochs must be >= 1");
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  Standardizer s;
  s.mean = x.colwise().mean().transpose();
  s.scale.resize(x.cols());
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const double var = (x.col(k).array() - s.mean(k)).square().mean();
    const double sd = std::sqrt(var);
    s.scale(k) = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Adam::Adam(Eigen::Index size, const TrainConfig& config)
    : lr_(config.learning_rate),
      beta1_(config.beta1),
      beta2_(config.beta2),
      eps_(config.epsilon),
      m_(Eigen::VectorXd::Zero(size)),
      v_(Eigen::VectorXd::Zero(size)) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  beta1_pow_ *= beta1_;
  beta2_pow_ *= beta2_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double step = lr_ / (1.0 - beta1_pow_);
  const double v_correction = 1.0 / (1.0 - beta2_pow_);
  params.array() -= step * m_.array() / ((v_.array() * v_correction).sqrt() + eps_);
}

PropensityLoss::PropensityLoss(Eigen::MatrixXd z, Eigen::VectorXd t)
    : z_(std::move(z)), t_(std::move(t)) {
  if (z_.rows() != t_.size() || z_.rows() == 0) {
    throw Error(ErrorKind::LengthMismatch, "propensity design and labels differ in length");
  }
}

double PropensityLoss::operator()(const Eigen::VectorXd& params, Eigen::VectorXd* grad) const {
  const Eigen::Index k = z_.cols();
  const auto n = static_cast<double>(z_.rows());
  const Eigen::VectorXd logits = (z_ * params.head(k)).array() + params(k);
  double loss = 0.0;
  Eigen::VectorXd residual(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    loss += softplus(logits(i)) - t_(i) * logits(i);
    const double z = logits(i);
    const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    residual(i) = s - t_(i);
  }
  if (grad) {
    grad->resize(k + 1);
    grad->head(k) = z_.transpose() * residual / n;
    (*grad)(k) = residual.sum() / n;
  }
  return loss / n;
}

OutcomeLoss::OutcomeLoss(Eigen::MatrixXd z, std::vector<int> t, Eigen::VectorXd y)
    : z_(std::move(z)), t_(std::move(t)), y_(std::move(y)) {
  const auto n = z_.rows();
  if (static_cast<Eigen::Index>(t_.size()) != n || y_.size() != n) {
    throw Error(ErrorKind::LengthMismatch, "outcome design, treatment and labels differ in length");
  }
  const auto n1 = static_cast<double>(std::count(t_.begin(), t_.end(), 1));
  const double n0 = static_cast<double>(n) - n1;
  if (n1 == 0.0 || n0 == 0.0) throw Error(ErrorKind::SingleArmDataset, "outcome loss needs both arms");
  row_weight_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) row_weight_(i) = t_[i] == 1 ? 1.0 / n1 : 1.0 / n0;
}

Eigen::Index OutcomeLoss::parameter_count() const { return H * z_.cols() + 3 * H + 2; }

double OutcomeLoss::operator()(const Eigen::VectorXd& params, Eigen::VectorXd* grad) const {
  const Eigen::Index k = z_.cols();
  const Eigen::Map<const Eigen::MatrixXd> w(params.data(), H, k);
  const auto b = params.segment(H * k, H);
  const auto v0 = params.segment(H * k + H, H);
  const double c0 = params(H * k + 2 * H);
  const auto v1 = params.segment(H * k + 2 * H + 1, H);
  const double c1 = params(H * k + 3 * H + 1);

  Eigen::MatrixXd pre = z_ * w.transpose();
  pre.rowwise() += b.transpose();
  const Eigen::MatrixXd rep = pre.cwiseMax(0.0);
  const Eigen::VectorXd pred0 = (rep * v0).array() + c0;
  const Eigen::VectorXd pred1 = (rep * v1).array() + c1;

  const Eigen::Index n = z_.rows();
  double loss = 0.0;
  Eigen::VectorXd g0 = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g1 = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = (t_[i] == 1 ? pred1(i) : pred0(i)) - y_(i);
    loss += row_weight_(i) * r * r;
    (t_[i] == 1 ? g1 : g0)(i) = 2.0 * row_weight_(i) * r;
  }
  if (grad) {
    grad->resize(parameter_count());
    Eigen::MatrixXd d_pre = g0 * v0.transpose() + g1 * v1.transpose();
    d_pre = d_pre.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    Eigen::Map<Eigen::MatrixXd>(grad->data(), H, k) = d_pre.transpose() * z_;
    grad->segment(H * k, H) = d_pre.colwise().sum().transpose();
    grad->segment(H * k + H, H) = rep.transpose() * g0;
    (*grad)(H * k + 2 * H) = g0.sum();
    grad->segment(H * k + 2 * H + 1, H) = rep.transpose() * g1;
    (*grad)(H * k + 3 * H + 1) = g1.sum();
  }
  return loss;
}

PropensityModel::PropensityModel(Eigen::VectorXd weights, double bias, CovariateMask mask,
                                 Standardizer standardizer, TrainConfig config, TrainingMeta meta)
    : weights_(std::move(weights)),
      bias_(bias),
      mask_(std::move(mask)),
      standardizer_(std::move(standardizer)),
      config_(config),
      meta_(meta) {
  if (static_cast<std::size_t>(weights_.size()) != mask_.count()) {
    throw Error(ErrorKind::DimensionMismatch, "propensity weights do not match mask");
  }
  if (!weights_.allFinite() || !std::isfinite(bias_)) {
    throw Error(ErrorKind::ValueError, "propensity parameters must be finite");
  }
}

Eigen::VectorXd PropensityModel::predict(const Eigen::MatrixXd& x) const {
  require_width(x, mask_);
  const Eigen::VectorXd logits = (standardizer_.apply(mask_.select(x)) * weights_).array() + bias_;
  return logits.unaryExpr([](double z) { return sigmoid(z); });
}

double PropensityModel::predict(const Eigen::VectorXd& x) const {
  return predict(Eigen::MatrixXd(x.transpose()))(0);
}

OutcomeModel::OutcomeModel(Eigen::VectorXd params, CovariateMask mask, Standardizer standardizer,
                           TrainConfig config, TrainingMeta meta)
    : params_(std::move(params)),
      mask_(std::move(mask)),
      standardizer_(std::move(standardizer)),
      config_(config),
      meta_(meta) {
  const auto k = static_cast<Eigen::Index>(mask_.count());
  if (params_.size() != H * k + 3 * H + 2) {
    throw Error(ErrorKind::DimensionMismatch, "outcome parameters do not match mask");
  }
  if (!params_.allFinite()) throw Error(ErrorKind::ValueError, "outcome parameters must be finite");
}

Eigen::MatrixXd OutcomeModel::represent(const Eigen::MatrixXd& x) const {
  require_width(x, mask_);
  const auto k = static_cast<Eigen::Index>(mask_.count());
  const Eigen::Map<const Eigen::MatrixXd> w(params_.data(), H, k);
  Eigen::MatrixXd pre = standardizer_.apply(mask_.select(x)) * w.transpose();
  pre.rowwise() += params_.segment(H * k, H).transpose();
  return pre.cwiseMax(0.0);
}

Eigen::VectorXd OutcomeModel::predict(const Eigen::MatrixXd& x, int t) const {
  if (t != 0 && t != 1) throw Error(ErrorKind::NonBinaryTreatment, "arm must be 0 or 1");
  const auto k = static_cast<Eigen::Index>(mask_.count());
  const Eigen::Index head = H * k + H + (t == 1 ? H + 1 : 0);
  return (represent(x) * params_.segment(head, H)).array() + params_(head + H);
}

Eigen::MatrixXd OutcomeModel::predict_arms(const Eigen::MatrixXd& x) const {
  const auto k = static_cast<Eigen::Index>(mask_.count());
  const Eigen::MatrixXd rep = represent(x);
  Eigen::MatrixXd out(x.rows(), 2);
  for (int t = 0; t < 2; ++t) {
    const Eigen::Index head = H * k + H + (t == 1 ? H + 1 : 0);
    out.col(t) = (rep * params_.segment(head, H)).array() + params_(head + H);
  }
  return out;
}

double OutcomeModel::predict(const Eigen::VectorXd& x, int t) const {
  return predict(Eigen::MatrixXd(x.transpose()), t)(0);
}

Eigen::VectorXd initial_propensity_params(Eigen::Index k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return uniform_block(k + 1, static_cast<double>(k), rng);
}

Eigen::VectorXd initial_outcome_params(Eigen::Index k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::VectorXd params(H * k + 3 * H + 2);
  params.head(H * k + H) = uniform_block(H * k + H, static_cast<double>(k), rng);
  params.tail(2 * H + 2) = uniform_block(2 * H + 2, static_cast<double>(H), rng);
  return params;
}

PropensityModel fit_propensity(const TabularDataset& data, const CovariateMask& mask,
                               const TrainConfig& config) {
  config.validate();
  require_mask_fits(mask, data.dims());
  require_both_arms(data);
  const Eigen::MatrixXd raw = mask.select(data.covariates());
  Standardizer standardizer = Standardizer::fit(raw);
  Eigen::VectorXd t(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) t(static_cast<Eigen::Index>(i)) = data.treatment()[i];
  const PropensityLoss loss(standardizer.apply(raw), std::move(t));
  const auto k = static_cast<Eigen::Index>(mask.count());
  TrainingMeta meta;
  const Eigen::VectorXd params = train(loss, initial_propensity_params(k, config.seed), config, meta);
  return PropensityModel(params.head(k), params(k), mask, std::move(standardizer), config, meta);
}

namespace {

double arm_mean(const TabularDataset& data, int t) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.treatment()[i] != t) continue;
    sum += data.y_factual()(static_cast<Eigen::Index>(i));
    ++n;
  }
  return sum / static_cast<double>(n);
}

}  // namespace

OutcomeModel fit_outcome(const TabularDataset& data, const CovariateMask& mask, const TrainConfig& config) {
  config.validate();
  require_mask_fits(mask, data.dims());
  require_both_arms(data);
  const Eigen::MatrixXd raw = mask.select(data.covariates());
  Standardizer standardizer = Standardizer::fit(raw);
  const OutcomeLoss loss(standardizer.apply(raw), data.treatment(), data.y_factual());
  const auto k = static_cast<Eigen::Index>(mask.count());
  TrainingMeta meta;
  Eigen::VectorXd init = initial_outcome_params(k, config.seed);
  // Heads start as the constant arm means (zero weights, bias = mean) so
  // raw-scale outcomes do not spend the epoch budget walking the intercepts.
  const Eigen::Index v0 = H * k + H;
  init.segment(v0, H).setZero();
  init(v0 + H) = arm_mean(data, 0);
  init.segment(v0 + H + 1, H).setZero();
  init(v0 + 2 * H + 1) = arm_mean(data, 1);
  Eigen::VectorXd params = train(loss, std::move(init), config, meta);
  return OutcomeModel(std::move(params), mask, std::move(standardizer), config, meta);
}

double predict_propensity(const PropensityModel& model, const Eigen::VectorXd& x) {
  return model.predict(x);
}

double predict_outcome(const OutcomeModel& model, const Eigen::VectorXd& x, int t) {
  return model.predict(x, t);
}

nlohmann::json to_json(const PropensityModel& model) {
  auto doc = common_json(model.mask(), model.standardizer(), model.config(), model.meta());
  doc["kind"] = "propensity";
  doc["weights"] = to_json(model.weights());
  doc["bias"] = model.bias();
  return doc;
}

nlohmann::json to_json(const OutcomeModel& model) {
  auto doc = common_json(model.mask(), model.standardizer(), model.config(), model.meta());
  doc["kind"] = "outcome";
  doc["representation_dim"] = H;
  doc["params"] = to_json(model.params());
  return doc;
}

PropensityModel propensity_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("kind") != "propensity") throw Error(ErrorKind::SchemaError, "not a propensity model");
    auto f = common_from_json(doc);
    return PropensityModel(vector_from_json(doc.at("weights")), doc.at("bias").get<double>(),
                           std::move(f.mask), std::move(f.standardizer), f.config, f.meta);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaError, e.what());
  }
}

OutcomeModel outcome_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("kind") != "outcome") throw Error(ErrorKind::SchemaError, "not an outcome model");
    if (doc.at("representation_dim").get<Eigen::Index>() != H) {
      throw Error(ErrorKind::SchemaError, "unsupported representation dimension");
    }
    auto f = common_from_json(doc);
    return OutcomeModel(vector_from_json(doc.at("params")), std::move(f.mask), std::move(f.standardizer),
                        f.config, f.meta);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaError, e.what());
  }
}

}  // namespace confbound
