#pragma once

// Exact confounding-bias quantities for a categorical joint p(U, T, Y).
//
// Integrals over the confounder domain are sums under counting measure.
// Confounder levels with zero marginal mass are outside the support and are
// skipped wherever a conditional on U = u would be undefined.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace confbound {

// Below this, Pr(T = t) counts as an empty arm and p(u|t) entries count as
// exact zeros in the deviation sums.
inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr double kSumTolerance = 1e-12;
inline constexpr double kDominanceTolerance = 1e-9;

// Exponent p >= 1 on the extended real line. Infinity is its own state so
// |x|^p never has to be evaluated for huge p.
class Exponent {
 public:
  static Exponent finite(double value);
  static Exponent infinity() { return Exponent(0.0, true); }

  bool is_infinite() const noexcept { return infinite_; }
  // Undefined for infinity; check is_infinite() first.
  double value() const noexcept { return value_; }
  // 1/p with 1/inf = 0.
  double reciprocal() const noexcept { return infinite_ ? 0.0 : 1.0 / value_; }

  std::string to_string() const;
  static Exponent parse(const std::string& text);

  friend bool operator==(const Exponent& a, const Exponent& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }

 private:
  Exponent(double value, bool infinite) : value_(value), infinite_(infinite) {}

  double value_;
  bool infinite_;
};

// Hölder-conjugate exponents, 1/p + 1/q = 1.
struct ConjugatePair {
  Exponent p;
  Exponent q;

  static ConjugatePair from_p(Exponent p);
};

class CategoricalJoint {
 public:
  // probs is flattened row-major with u varying slowest:
  // index = (u * K_T + t) * K_Y + y.
  CategoricalJoint(std::array<std::size_t, 3> dims, std::vector<double> probs,
                   std::vector<double> y_levels,
                   std::vector<std::string> u_labels = {},
                   std::vector<std::string> t_labels = {});

  std::size_t k_u() const noexcept { return dims_[0]; }
  std::size_t k_t() const noexcept { return dims_[1]; }
  std::size_t k_y() const noexcept { return dims_[2]; }
  const std::array<std::size_t, 3>& dims() const noexcept { return dims_; }

  double prob(std::size_t u, std::size_t t, std::size_t y) const {
    return probs_[(u * dims_[1] + t) * dims_[2] + y];
  }
  const std::vector<double>& probs() const noexcept { return probs_; }
  const std::vector<double>& y_levels() const noexcept { return y_levels_; }
  const std::vector<std::string>& u_labels() const noexcept { return u_labels_; }
  const std::vector<std::string>& t_labels() const noexcept { return t_labels_; }

  // Pr(U = u, T = t).
  double prob_ut(std::size_t u, std::size_t t) const;
  // Pr(T = t).
  double prob_t(std::size_t t) const;

 private:
  std::array<std::size_t, 3> dims_;
  std::vector<double> probs_;
  std::vector<double> y_levels_;
  std::vector<std::string> u_labels_;
  std::vector<std::string> t_labels_;
};

nlohmann::json to_json(const CategoricalJoint& joint);
CategoricalJoint joint_from_json(const nlohmann::json& doc);

struct BoundReport {
  std::size_t t = 0;
  double obs_expectation = 0.0;
  double do_expectation = 0.0;
  double bias = 0.0;
  double b_ut = 0.0;
  double b_uy = 0.0;
  double bound = 0.0;
  ConjugatePair pair{Exponent::finite(1.0), Exponent::infinity()};
};

nlohmann::json to_json(const BoundReport& report);

std::vector<double> marginal_u(const CategoricalJoint& joint);
std::vector<double> cond_u_given_t(const CategoricalJoint& joint, std::size_t t);

// E[Y | T = t, U = u] for every u; entries for u outside the support are NaN.
std::vector<double> cond_outcome_mean(const CategoricalJoint& joint, std::size_t t);

// E[Y | t] through the expansion sum_u p(u|t) E[Y|t,u].
double obs_expectation(const CategoricalJoint& joint, std::size_t t);
// E[Y | t] read directly off p(y | t).
double obs_expectation_direct(const CategoricalJoint& joint, std::size_t t);
// E[Y | do(t)] = sum_u p(u) E[Y|t,u].
double do_expectation(const CategoricalJoint& joint, std::size_t t);
double confounding_bias(const CategoricalJoint& joint, std::size_t t);

// Treatment sensitivity ||p(U|t) - p(U)||_p.
double b_ut(const CategoricalJoint& joint, std::size_t t, Exponent p);
// Outcome sensitivity ||E[Y|t,U] - E[Y|t]||_q over the support of U.
double b_uy(const CategoricalJoint& joint, std::size_t t, Exponent q);

BoundReport holder_bound(const CategoricalJoint& joint, std::size_t t,
                         const ConjugatePair& pair);

double tv_distance(std::span<const double> p, std::span<const double> q);

// 2 TV[p(U|t), p(U)] * sup_u |E[Y|t,u] - E[Y|t]|.
BoundReport tv_bound(const CategoricalJoint& joint, std::size_t t);

// Bound on |E[Y|t] - E[Y|do(t)]| / E[Y|t]; requires strictly positive outcomes.
double relative_bound(const CategoricalJoint& joint, std::size_t t);

// {1, 1.25, 1.5, 2, 3, 4, 8, inf}
std::vector<Exponent> default_p_grid();

// Smallest Hölder bound over the grid. The true infimum over all conjugate
// pairs may lie between grid points.
BoundReport tightest_bound_grid(const CategoricalJoint& joint, std::size_t t,
                                std::span<const Exponent> p_grid);

struct ExactAte {
  double tau_ate = 0.0;
  double tau_igno = 0.0;
  double half_width = 0.0;
};

ExactAte ate_exact(const CategoricalJoint& joint, std::size_t t1, std::size_t t2);

}  // namespace confbound
