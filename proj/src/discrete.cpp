#include "confbound/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>

#include "confbound/error.hpp"

namespace confbound {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_arm(const CategoricalJoint& joint, std::size_t t) {
  if (t >= joint.k_t()) {
    throw Error(ErrorKind::IndexOutOfRange,
                "treatment level " + std::to_string(t) + " out of range");
  }
  if (joint.prob_t(t) < kProbabilityFloor) {
    throw Error(ErrorKind::ZeroArmProbability,
                "Pr(T=" + std::to_string(t) + ") is zero");
  }
}

// l_p norm, scaled by the largest magnitude so |x|^p cannot overflow or
// flush to zero for large p.
double lp_norm(std::span<const double> values, Exponent p) {
  double largest = 0.0;
  for (double v : values) largest = std::max(largest, std::abs(v));
  if (p.is_infinite()) return largest;
  if (p.value() == 1.0) {
    double sum = 0.0;
    for (double v : values) sum += std::abs(v);
    return sum;
  }
  if (largest == 0.0) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += std::pow(std::abs(v) / largest, p.value());
  return largest * std::pow(sum, 1.0 / p.value());
}

// p(u|t) - p(u) with sub-floor conditionals snapped to zero.
std::vector<double> treatment_deviation(const CategoricalJoint& joint, std::size_t t) {
  const auto marginal = marginal_u(joint);
  auto cond = cond_u_given_t(joint, t);
  std::vector<double> dev(joint.k_u());
  for (std::size_t u = 0; u < joint.k_u(); ++u) {
    const double c = cond[u] < kProbabilityFloor ? 0.0 : cond[u];
    dev[u] = c - marginal[u];
  }
  return dev;
}

// E[Y|t,u] - E[Y|t] over the support of U.
std::vector<double> outcome_deviation(const CategoricalJoint& joint, std::size_t t) {
  const auto means = cond_outcome_mean(joint, t);
  const double overall = obs_expectation(joint, t);
  std::vector<double> dev;
  dev.reserve(means.size());
  for (double m : means) {
    if (!std::isnan(m)) dev.push_back(m - overall);
  }
  return dev;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Exponent Exponent::finite(double value) {
  if (!(value >= 1.0) || !std::isfinite(value)) {
    throw Error(ErrorKind::InvalidExponent,
                "exponent must be >= 1, got " + format_double(value));
  }
  return Exponent(value, false);
}

std::string Exponent::to_string() const {
  return infinite_ ? std::string("inf") : format_double(value_);
}

Exponent Exponent::parse(const std::string& text) {
  if (text == "inf" || text == "infinity" || text == "Inf") return infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidExponent, "cannot parse exponent '" + text + "'");
  }
  if (used != text.size()) {
    throw Error(ErrorKind::InvalidExponent, "cannot parse exponent '" + text + "'");
  }
  if (std::isinf(v)) return infinity();
  return finite(v);
}

ConjugatePair ConjugatePair::from_p(Exponent p) {
  if (p.is_infinite()) return {p, Exponent::finite(1.0)};
  if (p.value() == 1.0) return {p, Exponent::infinity()};
  return {p, Exponent::finite(p.value() / (p.value() - 1.0))};
}

CategoricalJoint::CategoricalJoint(std::array<std::size_t, 3> dims,
                                   std::vector<double> probs,
                                   std::vector<double> y_levels,
                                   std::vector<std::string> u_labels,
                                   std::vector<std::string> t_labels)
    : dims_(dims),
      probs_(std::move(probs)),
      y_levels_(std::move(y_levels)),
      u_labels_(std::move(u_labels)),
      t_labels_(std::move(t_labels)) {
  for (std::size_t k : dims_) {
    if (k < 2) throw Error(ErrorKind::InvalidJoint, "every dimension must be >= 2");
  }
  if (probs_.size() != dims_[0] * dims_[1] * dims_[2]) {
    throw Error(ErrorKind::InvalidJoint, "probs has " + std::to_string(probs_.size()) +
                                             " entries, dims imply " +
                                             std::to_string(dims_[0] * dims_[1] * dims_[2]));
  }
  if (y_levels_.size() != dims_[2]) {
    throw Error(ErrorKind::InvalidJoint, "y_levels length must equal K_Y");
  }
  for (std::size_t i = 1; i < y_levels_.size(); ++i) {
    if (!(y_levels_[i] > y_levels_[i - 1])) {
      throw Error(ErrorKind::InvalidJoint, "y_levels must be strictly increasing");
    }
  }
  for (double y : y_levels_) {
    if (!std::isfinite(y)) throw Error(ErrorKind::InvalidJoint, "y_levels must be finite");
  }
  if (!u_labels_.empty() && u_labels_.size() != dims_[0]) {
    throw Error(ErrorKind::InvalidJoint, "u_labels length must equal K_U");
  }
  if (!t_labels_.empty() && t_labels_.size() != dims_[1]) {
    throw Error(ErrorKind::InvalidJoint, "t_labels length must equal K_T");
  }
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || p > 1.0) {
      throw Error(ErrorKind::InvalidJoint, "probabilities must lie in [0, 1]");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw Error(ErrorKind::InvalidJoint,
                "probabilities sum to " + format_double(total) + ", expected 1");
  }
  // Positivity: every treatment level reachable from every supported u.
  for (std::size_t u = 0; u < dims_[0]; ++u) {
    double mass_u = 0.0;
    for (std::size_t t = 0; t < dims_[1]; ++t) mass_u += prob_ut(u, t);
    if (mass_u == 0.0) continue;
    for (std::size_t t = 0; t < dims_[1]; ++t) {
      if (!(prob_ut(u, t) > 0.0)) {
        throw Error(ErrorKind::PositivityViolation,
                    "Pr(T=" + std::to_string(t) + "|U=" + std::to_string(u) + ") = 0");
      }
    }
  }
}

double CategoricalJoint::prob_ut(std::size_t u, std::size_t t) const {
  double s = 0.0;
  for (std::size_t y = 0; y < dims_[2]; ++y) s += prob(u, t, y);
  return s;
}

double CategoricalJoint::prob_t(std::size_t t) const {
  double s = 0.0;
  for (std::size_t u = 0; u < dims_[0]; ++u) s += prob_ut(u, t);
  return s;
}

nlohmann::json to_json(const CategoricalJoint& joint) {
  nlohmann::json doc;
  doc["dims"] = {joint.k_u(), joint.k_t(), joint.k_y()};
  doc["y_levels"] = joint.y_levels();
  doc["probs"] = joint.probs();
  if (!joint.u_labels().empty()) doc["u_labels"] = joint.u_labels();
  if (!joint.t_labels().empty()) doc["t_labels"] = joint.t_labels();
  return doc;
}

CategoricalJoint joint_from_json(const nlohmann::json& doc) {
  try {
    if (!doc.is_object()) throw Error(ErrorKind::SchemaError, "joint must be a JSON object");
    for (const char* key : {"dims", "y_levels", "probs"}) {
      if (!doc.contains(key)) {
        throw Error(ErrorKind::SchemaError, std::string("missing key '") + key + "'");
      }
    }
    const auto dims = doc.at("dims").get<std::vector<std::size_t>>();
    if (dims.size() != 3) throw Error(ErrorKind::SchemaError, "dims must have 3 entries");
    std::vector<std::string> u_labels;
    std::vector<std::string> t_labels;
    if (doc.contains("u_labels")) u_labels = doc.at("u_labels").get<std::vector<std::string>>();
    if (doc.contains("t_labels")) t_labels = doc.at("t_labels").get<std::vector<std::string>>();
    return CategoricalJoint({dims[0], dims[1], dims[2]},
                            doc.at("probs").get<std::vector<double>>(),
                            doc.at("y_levels").get<std::vector<double>>(),
                            std::move(u_labels), std::move(t_labels));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaError, e.what());
  }
}

nlohmann::json to_json(const BoundReport& report) {
  return {{"t", report.t},
          {"obs_expectation", report.obs_expectation},
          {"do_expectation", report.do_expectation},
          {"bias", report.bias},
          {"b_ut", report.b_ut},
          {"b_uy", report.b_uy},
          {"bound", report.bound},
          {"p", report.pair.p.to_string()},
          {"q", report.pair.q.to_string()}};
}

std::vector<double> marginal_u(const CategoricalJoint& joint) {
  std::vector<double> out(joint.k_u(), 0.0);
  for (std::size_t u = 0; u < joint.k_u(); ++u) {
    for (std::size_t t = 0; t < joint.k_t(); ++t) out[u] += joint.prob_ut(u, t);
  }
  return out;
}

std::vector<double> cond_u_given_t(const CategoricalJoint& joint, std::size_t t) {
  check_arm(joint, t);
  const double arm = joint.prob_t(t);
  std::vector<double> out(joint.k_u());
  for (std::size_t u = 0; u < joint.k_u(); ++u) out[u] = joint.prob_ut(u, t) / arm;
  return out;
}

std::vector<double> cond_outcome_mean(const CategoricalJoint& joint, std::size_t t) {
  std::vector<double> out(joint.k_u(), kNaN);
  for (std::size_t u = 0; u < joint.k_u(); ++u) {
    const double mass = joint.prob_ut(u, t);
    if (mass == 0.0) continue;
    double s = 0.0;
    for (std::size_t y = 0; y < joint.k_y(); ++y) s += joint.y_levels()[y] * joint.prob(u, t, y);
    out[u] = s / mass;
  }
  return out;
}

double obs_expectation(const CategoricalJoint& joint, std::size_t t) {
  const auto cond = cond_u_given_t(joint, t);
  const auto means = cond_outcome_mean(joint, t);
  double s = 0.0;
  for (std::size_t u = 0; u < joint.k_u(); ++u) {
    if (cond[u] > 0.0) s += cond[u] * means[u];
  }
  return s;
}

double obs_expectation_direct(const CategoricalJoint& joint, std::size_t t) {
  check_arm(joint, t);
  double s = 0.0;
  for (std::size_t y = 0; y < joint.k_y(); ++y) {
    double p_ty = 0.0;
    for (std::size_t u = 0; u < joint.k_u(); ++u) p_ty += joint.prob(u, t, y);
    s += joint.y_levels()[y] * p_ty;
  }
  return s / joint.prob_t(t);
}

double do_expectation(const CategoricalJoint& joint, std::size_t t) {
  if (t >= joint.k_t()) {
    throw Error(ErrorKind::IndexOutOfRange,
                "treatment level " + std::to_string(t) + " out of range");
  }
  const auto marginal = marginal_u(joint);
  const auto means = cond_outcome_mean(joint, t);
  double s = 0.0;
  for (std::size_t u = 0; u < joint.k_u(); ++u) {
    if (marginal[u] > 0.0) s += marginal[u] * means[u];
  }
  return s;
}

double confounding_bias(const CategoricalJoint& joint, std::size_t t) {
  return std::abs(obs_expectation(joint, t) - do_expectation(joint, t));
}

double b_ut(const CategoricalJoint& joint, std::size_t t, Exponent p) {
  return lp_norm(treatment_deviation(joint, t), p);
}

double b_uy(const CategoricalJoint& joint, std::size_t t, Exponent q) {
  check_arm(joint, t);
  return lp_norm(outcome_deviation(joint, t), q);
}

BoundReport holder_bound(const CategoricalJoint& joint, std::size_t t,
                         const ConjugatePair& pair) {
  BoundReport r;
  r.t = t;
  r.obs_expectation = obs_expectation(joint, t);
  r.do_expectation = do_expectation(joint, t);
  r.bias = std::abs(r.obs_expectation - r.do_expectation);
  r.b_ut = b_ut(joint, t, pair.p);
  r.b_uy = b_uy(joint, t, pair.q);
  r.bound = r.b_ut * r.b_uy;
  r.pair = pair;
  return r;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw Error(ErrorKind::LengthMismatch, "distributions have different lengths");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

BoundReport tv_bound(const CategoricalJoint& joint, std::size_t t) {
  const auto marginal = marginal_u(joint);
  auto cond = cond_u_given_t(joint, t);
  for (double& c : cond) {
    if (c < kProbabilityFloor) c = 0.0;
  }
  BoundReport r;
  r.t = t;
  r.obs_expectation = obs_expectation(joint, t);
  r.do_expectation = do_expectation(joint, t);
  r.bias = std::abs(r.obs_expectation - r.do_expectation);
  r.b_ut = 2.0 * tv_distance(cond, marginal);
  r.b_uy = b_uy(joint, t, Exponent::infinity());
  r.bound = r.b_ut * r.b_uy;
  r.pair = ConjugatePair::from_p(Exponent::finite(1.0));
  return r;
}

double relative_bound(const CategoricalJoint& joint, std::size_t t) {
  for (double y : joint.y_levels()) {
    if (!(y > 0.0)) {
      throw Error(ErrorKind::NonPositiveOutcome, "relative bound needs every y_level > 0");
    }
  }
  const auto report = tv_bound(joint, t);
  return report.bound / report.obs_expectation;
}

std::vector<Exponent> default_p_grid() {
  std::vector<Exponent> grid;
  for (double p : {1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 8.0}) grid.push_back(Exponent::finite(p));
  grid.push_back(Exponent::infinity());
  return grid;
}

BoundReport tightest_bound_grid(const CategoricalJoint& joint, std::size_t t,
                                std::span<const Exponent> p_grid) {
  if (p_grid.empty()) throw Error(ErrorKind::EmptyInput, "exponent grid is empty");
  std::optional<BoundReport> best;
  for (const Exponent& p : p_grid) {
    auto report = holder_bound(joint, t, ConjugatePair::from_p(p));
    if (!best || report.bound < best->bound) best = report;
  }
  return *best;
}

ExactAte ate_exact(const CategoricalJoint& joint, std::size_t t1, std::size_t t2) {
  ExactAte out;
  out.tau_ate = do_expectation(joint, t1) - do_expectation(joint, t2);
  out.tau_igno = obs_expectation(joint, t1) - obs_expectation(joint, t2);
  const Exponent one = Exponent::finite(1.0);
  const Exponent inf = Exponent::infinity();
  out.half_width = b_ut(joint, t1, one) * b_uy(joint, t1, inf) +
                   b_ut(joint, t2, one) * b_uy(joint, t2, inf);
  return out;
}

}  // namespace confbound
