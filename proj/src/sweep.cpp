#include "confbound/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "confbound/error.hpp"
#include "confbound/parallel.hpp"

namespace confbound {

void SweepConfig::validate() const {
  if (n_samples < 1) throw Error(ErrorKind::InvalidConfig, "n_samples must be >= 1");
  if (!(dirichlet_alpha > 0.0) || !std::isfinite(dirichlet_alpha)) {
    throw Error(ErrorKind::InvalidConfig, "dirichlet_alpha must be > 0");
  }
  for (std::size_t k : dims) {
    if (k < 2) throw Error(ErrorKind::InvalidConfig, "every dimension must be >= 2");
  }
  if (t_eval >= dims[1]) throw Error(ErrorKind::InvalidConfig, "t_eval exceeds K_T");
}

nlohmann::json to_json(const SweepConfig& config) {
  return {{"n_samples", config.n_samples},
          {"dirichlet_alpha", config.dirichlet_alpha},
          {"dims", config.dims},
          {"t_eval", config.t_eval},
          {"base_seed", config.base_seed}};
}

CategoricalJoint sample_joint_dirichlet(double alpha, std::array<std::size_t, 3> dims,
                                        std::uint64_t seed) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorKind::InvalidConfig, "Dirichlet concentration must be > 0");
  }
  const std::size_t cells = dims[0] * dims[1] * dims[2];
  std::vector<double> y_levels(dims[2]);
  std::iota(y_levels.begin(), y_levels.end(), 0.0);

  for (int attempt = 0; attempt < kMaxDirichletRetries; ++attempt) {
    std::mt19937_64 rng(attempt == 0 ? seed : derive_seed(seed, attempt));
    std::gamma_distribution<double> gamma(alpha, 1.0);
    std::vector<double> probs(cells);
    double total = 0.0;
    for (double& p : probs) {
      p = gamma(rng);
      total += p;
    }
    if (!(total > 0.0) || !std::isfinite(total)) continue;
    for (double& p : probs) p /= total;
    try {
      CategoricalJoint joint(dims, std::move(probs), y_levels);
      bool arms_ok = true;
      for (std::size_t t = 0; t < dims[1]; ++t) {
        arms_ok = arms_ok && joint.prob_t(t) >= kProbabilityFloor;
      }
      if (arms_ok) return joint;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::PositivityViolation && e.kind() != ErrorKind::InvalidJoint) {
        throw;
      }
    }
  }
  throw Error(ErrorKind::DegenerateDraw,
              "no valid Dirichlet draw after " + std::to_string(kMaxDirichletRetries) +
                  " attempts");
}

SweepRecord evaluate_record(const CategoricalJoint& joint, std::size_t t,
                            std::size_t index, std::uint64_t seed) {
  const auto report = tv_bound(joint, t);
  return {index, seed, report.bias, report.b_ut, report.b_uy, report.bound};
}

std::vector<SweepRecord> run_sweep(const SweepConfig& config) {
  config.validate();
  std::vector<SweepRecord> records(config.n_samples);
  const std::size_t workers = config.workers == 0 ? default_workers() : config.workers;
  parallel_for(
      config.n_samples,
      [&](std::size_t i) {
        const std::uint64_t seed = derive_seed(config.base_seed, i);
        try {
          const auto joint = sample_joint_dirichlet(config.dirichlet_alpha, config.dims, seed);
          records[i] = evaluate_record(joint, config.t_eval, i, seed);
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::DegenerateDraw) {
            throw Error(ErrorKind::DegenerateDraw,
                        "sweep index " + std::to_string(i) + ": " + e.what());
          }
          throw;
        }
      },
      workers);
  return records;
}

namespace {

std::vector<double> linear_edges(double lo, double hi, std::size_t n_bins) {
  if (!(hi > lo)) hi = lo + 1.0;
  std::vector<double> edges(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) {
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_bins);
  }
  return edges;
}

std::size_t bin_of(double v, const std::vector<double>& edges) {
  const std::size_t n_bins = edges.size() - 1;
  const double width = edges.back() - edges.front();
  auto b = static_cast<std::size_t>((v - edges.front()) / width * static_cast<double>(n_bins));
  return std::min(b, n_bins - 1);
}

}  // namespace

SweepSummary summarize_sweep(std::span<const SweepRecord> records, std::size_t n_bins) {
  if (records.empty()) throw Error(ErrorKind::EmptyInput, "no sweep records to summarize");
  if (n_bins < 1) throw Error(ErrorKind::InvalidConfig, "n_bins must be >= 1");
  SweepSummary s;
  s.count = records.size();
  s.order_by_bias.resize(records.size());
  std::iota(s.order_by_bias.begin(), s.order_by_bias.end(), 0);
  std::stable_sort(s.order_by_bias.begin(), s.order_by_bias.end(),
                   [&](std::size_t a, std::size_t b) { return records[a].bias < records[b].bias; });

  double ut_lo = records[0].b_ut_1, ut_hi = ut_lo;
  double uy_lo = records[0].b_uy_inf, uy_hi = uy_lo;
  double slack_sum = 0.0;
  s.slack_min = std::numeric_limits<double>::infinity();
  s.slack_max = -std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    ut_lo = std::min(ut_lo, r.b_ut_1);
    ut_hi = std::max(ut_hi, r.b_ut_1);
    uy_lo = std::min(uy_lo, r.b_uy_inf);
    uy_hi = std::max(uy_hi, r.b_uy_inf);
    const double slack = r.bound - r.bias;
    s.slack_min = std::min(s.slack_min, slack);
    s.slack_max = std::max(s.slack_max, slack);
    slack_sum += slack;
    if (r.bias > r.bound + kDominanceTolerance) ++s.dominance_violations;
  }
  s.slack_mean = slack_sum / static_cast<double>(records.size());

  s.edges_ut = linear_edges(ut_lo, ut_hi, n_bins);
  s.edges_uy = linear_edges(uy_lo, uy_hi, n_bins);
  std::vector<double> sums(n_bins * n_bins, 0.0);
  s.counts.assign(n_bins * n_bins, 0);
  std::vector<double> ut_sum(n_bins, 0.0), uy_sum(n_bins, 0.0);
  std::vector<std::size_t> ut_count(n_bins, 0), uy_count(n_bins, 0);
  for (const auto& r : records) {
    const std::size_t i = bin_of(r.b_ut_1, s.edges_ut);
    const std::size_t j = bin_of(r.b_uy_inf, s.edges_uy);
    sums[i * n_bins + j] += r.bias;
    ++s.counts[i * n_bins + j];
    ut_sum[i] += r.bias;
    ++ut_count[i];
    uy_sum[j] += r.bias;
    ++uy_count[j];
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  s.mean_bias.resize(n_bins * n_bins);
  for (std::size_t k = 0; k < sums.size(); ++k) {
    s.mean_bias[k] = s.counts[k] ? sums[k] / static_cast<double>(s.counts[k]) : nan;
  }
  s.mean_bias_by_ut.resize(n_bins);
  s.mean_bias_by_uy.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    s.mean_bias_by_ut[k] = ut_count[k] ? ut_sum[k] / static_cast<double>(ut_count[k]) : nan;
    s.mean_bias_by_uy[k] = uy_count[k] ? uy_sum[k] / static_cast<double>(uy_count[k]) : nan;
  }
  return s;
}

nlohmann::json to_json(const SweepSummary& s) {
  auto nullable = [](const std::vector<double>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (double x : v) arr.push_back(std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x));
    return arr;
  };
  return {{"count", s.count},
          {"dominance_violations", s.dominance_violations},
          {"order_by_bias", s.order_by_bias},
          {"edges_b_ut_1", s.edges_ut},
          {"edges_b_uy_inf", s.edges_uy},
          {"mean_bias", nullable(s.mean_bias)},
          {"counts", s.counts},
          {"mean_bias_by_b_ut_1", nullable(s.mean_bias_by_ut)},
          {"mean_bias_by_b_uy_inf", nullable(s.mean_bias_by_uy)},
          {"slack", {{"min", s.slack_min}, {"max", s.slack_max}, {"mean", s.slack_mean}}}};
}

}  // namespace confbound
