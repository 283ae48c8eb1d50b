#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "confbound/discrete.hpp"
#include "json.hpp"

namespace confbound {

struct SweepConfig {
  std::size_t n_samples = 30000;
  double dirichlet_alpha = 0.4;
  std::array<std::size_t, 3> dims{2, 2, 2};
  std::size_t t_eval = 0;
  std::uint64_t base_seed = 0;
  // 0 = one worker per hardware thread. Does not affect the output.
  std::size_t workers = 0;

  void validate() const;
};

nlohmann::json to_json(const SweepConfig& config);

struct SweepRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  double bias = 0.0;
  double b_ut_1 = 0.0;
  double b_uy_inf = 0.0;
  double bound = 0.0;

  friend bool operator==(const SweepRecord&, const SweepRecord&) = default;
};

inline constexpr int kMaxDirichletRetries = 100;

// One draw of the K_U*K_T*K_Y cell probabilities from a symmetric
// Dirichlet(alpha), via normalized Gamma(alpha, 1) variates. Outcome levels
// are 0..K_Y-1. Draws with an empty arm or a positivity violation are
// redrawn from a derived seed.
CategoricalJoint sample_joint_dirichlet(double alpha, std::array<std::size_t, 3> dims,
                                        std::uint64_t seed);

// Record i depends only on (base_seed, i).
std::vector<SweepRecord> run_sweep(const SweepConfig& config);

SweepRecord evaluate_record(const CategoricalJoint& joint, std::size_t t,
                            std::size_t index, std::uint64_t seed);

struct SweepSummary {
  std::size_t count = 0;
  std::size_t dominance_violations = 0;
  // Record indices ordered by increasing bias.
  std::vector<std::size_t> order_by_bias;
  // Bin edges along b_ut_1 (rows) and b_uy_inf (columns).
  std::vector<double> edges_ut;
  std::vector<double> edges_uy;
  // Row-major n_bins x n_bins; mean bias is NaN for empty cells.
  std::vector<double> mean_bias;
  std::vector<std::size_t> counts;
  // Mean bias per bin along each axis, pooled over the other axis.
  std::vector<double> mean_bias_by_ut;
  std::vector<double> mean_bias_by_uy;
  double slack_min = 0.0;
  double slack_max = 0.0;
  double slack_mean = 0.0;
};

SweepSummary summarize_sweep(std::span<const SweepRecord> records, std::size_t n_bins = 10);

nlohmann::json to_json(const SweepSummary& summary);

}  // namespace confbound
