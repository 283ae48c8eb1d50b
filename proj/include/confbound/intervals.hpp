#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "confbound/dataset.hpp"

namespace confbound {

// tau_igno +/- alpha * half_width. Intervals are closed: endpoints count as
// inside for both the inclusion and the zero-crossing indicators.
class EffectInterval {
 public:
  EffectInterval(double tau_igno, double half_width, double alpha);

  double tau_igno() const noexcept { return tau_igno_; }
  double half_width() const noexcept { return half_width_; }
  double alpha() const noexcept { return alpha_; }
  double lower() const noexcept { return tau_igno_ - alpha_ * half_width_; }
  double upper() const noexcept { return tau_igno_ + alpha_ * half_width_; }
  bool contains(double value) const noexcept { return lower() <= value && value <= upper(); }

 private:
  double tau_igno_;
  double half_width_;
  double alpha_;
};

EffectInterval interval(double tau_igno, double half_width, double alpha);

// Mean treated outcome minus mean control outcome.
double tau_igno_hat(const TabularDataset& data);

struct Rate {
  double rate = 0.0;
  double standard_error = 0.0;  // sqrt(r (1 - r) / n)
};

Rate inclusion_rate(std::span<const double> truths, std::span<const EffectInterval> intervals);
Rate zero_crossing_rate(std::span<const EffectInterval> intervals);

struct MetricPoint {
  double alpha = 0.0;
  double inclusion_rate = 0.0;
  double zero_crossing_rate = 0.0;
  double stderr_ir = 0.0;
  double stderr_zc = 0.0;
  bool has_inclusion = true;
};

using MetricCurve = std::vector<MetricPoint>;

// Per-alpha IR and ZC over units with centers tau_igno and the given half
// widths. With empty truths, IR is omitted (has_inclusion = false).
MetricCurve metric_curve(std::span<const double> truths, std::span<const double> centers,
                         std::span<const double> half_widths, std::span<const double> alphas);

bool is_monotone(const MetricCurve& curve);

// "start:stop:step" (inclusive of stop within rounding) or a comma list;
// both forms may be mixed ("0,0.5:1:0.25"). Result is sorted and unique.
std::vector<double> parse_alpha_grid(const std::string& text);
std::vector<double> default_ate_alphas();   // 0:4:0.05
std::vector<double> default_cate_alphas();  // 0:10:0.1

}  // namespace confbound
