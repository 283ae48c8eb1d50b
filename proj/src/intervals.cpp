#include "confbound/intervals.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "confbound/error.hpp"

namespace confbound {

namespace {

Rate binomial(std::size_t hits, std::size_t n) {
  const double r = static_cast<double>(hits) / static_cast<double>(n);
  return {r, std::sqrt(r * (1.0 - r) / static_cast<double>(n))};
}

double parse_number(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (text.empty() || used != text.size() || !std::isfinite(v)) {
    throw Error(ErrorKind::InvalidConfig, "bad number '" + text + "' in alpha grid");
  }
  return v;
}

std::vector<double> range(double start, double stop, double step) {
  if (!(step > 0.0) || stop < start) {
    throw Error(ErrorKind::InvalidConfig, "alpha range needs step > 0 and stop >= start");
  }
  std::vector<double> out;
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
  // Rounded so that e.g. 20 * 0.05 lands exactly on 1.
  for (std::size_t i = 0; i <= count; ++i) {
    out.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
  }
  return out;
}

}  // namespace

EffectInterval::EffectInterval(double tau_igno, double half_width, double alpha)
    : tau_igno_(tau_igno), half_width_(half_width), alpha_(alpha) {
  if (!(half_width >= 0.0)) throw Error(ErrorKind::NegativeWidth, "half width must be >= 0");
  if (!(alpha >= 0.0)) throw Error(ErrorKind::NegativeWidth, "alpha must be >= 0");
}

EffectInterval interval(double tau_igno, double half_width, double alpha) {
  return EffectInterval(tau_igno, half_width, alpha);
}

double tau_igno_hat(const TabularDataset& data) {
  double sum[2] = {0.0, 0.0};
  std::size_t count[2] = {0, 0};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int t = data.treatment()[i];
    sum[t] += data.y_factual()(static_cast<Eigen::Index>(i));
    ++count[t];
  }
  if (count[0] == 0 || count[1] == 0) {
    throw Error(ErrorKind::SingleArmDataset, "naive estimate needs both arms");
  }
  return sum[1] / static_cast<double>(count[1]) - sum[0] / static_cast<double>(count[0]);
}

Rate inclusion_rate(std::span<const double> truths, std::span<const EffectInterval> intervals) {
  if (truths.size() != intervals.size()) {
    throw Error(ErrorKind::LengthMismatch, "truths and intervals differ in length");
  }
  if (intervals.empty()) throw Error(ErrorKind::EmptyInput, "no intervals");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < intervals.size(); ++i) hits += intervals[i].contains(truths[i]) ? 1 : 0;
  return binomial(hits, intervals.size());
}

Rate zero_crossing_rate(std::span<const EffectInterval> intervals) {
  if (intervals.empty()) throw Error(ErrorKind::EmptyInput, "no intervals");
  std::size_t hits = 0;
  for (const auto& iv : intervals) hits += iv.contains(0.0) ? 1 : 0;
  return binomial(hits, intervals.size());
}

MetricCurve metric_curve(std::span<const double> truths, std::span<const double> centers,
                         std::span<const double> half_widths, std::span<const double> alphas) {
  if (centers.size() != half_widths.size() || (!truths.empty() && truths.size() != centers.size())) {
    throw Error(ErrorKind::LengthMismatch, "truths, centers and half widths differ in length");
  }
  if (centers.empty()) throw Error(ErrorKind::EmptyInput, "no units");
  if (!std::is_sorted(alphas.begin(), alphas.end())) {
    throw Error(ErrorKind::InvalidConfig, "alphas must be sorted ascending");
  }
  MetricCurve curve;
  curve.reserve(alphas.size());
  std::vector<EffectInterval> intervals;
  intervals.reserve(centers.size());
  for (double alpha : alphas) {
    intervals.clear();
    for (std::size_t i = 0; i < centers.size(); ++i) intervals.emplace_back(centers[i], half_widths[i], alpha);
    MetricPoint point;
    point.alpha = alpha;
    const Rate zc = zero_crossing_rate(intervals);
    point.zero_crossing_rate = zc.rate;
    point.stderr_zc = zc.standard_error;
    if (truths.empty()) {
      point.has_inclusion = false;
    } else {
      const Rate ir = inclusion_rate(truths, intervals);
      point.inclusion_rate = ir.rate;
      point.stderr_ir = ir.standard_error;
    }
    curve.push_back(point);
  }
  return curve;
}

bool is_monotone(const MetricCurve& curve) {
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve[i].inclusion_rate < curve[i - 1].inclusion_rate) return false;
    if (curve[i].zero_crossing_rate < curve[i - 1].zero_crossing_rate) return false;
  }
  return true;
}

std::vector<double> parse_alpha_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) continue;
    if (item.find(':') == std::string::npos) {
      out.push_back(parse_number(item));
      continue;
    }
    std::stringstream parts(item);
    std::string a, b, c;
    if (!std::getline(parts, a, ':') || !std::getline(parts, b, ':') || !std::getline(parts, c, ':') ||
        parts.rdbuf()->in_avail() > 0) {
      throw Error(ErrorKind::InvalidConfig, "alpha range must be start:stop:step, got '" + item + "'");
    }
    const auto r = range(parse_number(a), parse_number(b), parse_number(c));
    out.insert(out.end(), r.begin(), r.end());
  }
  if (out.empty()) throw Error(ErrorKind::InvalidConfig, "empty alpha grid");
  for (double a : out) {
    if (a < 0.0) throw Error(ErrorKind::NegativeWidth, "alpha must be >= 0");
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<double> default_ate_alphas() { return range(0.0, 4.0, 0.05); }
std::vector<double> default_cate_alphas() { return range(0.0, 10.0, 0.1); }

}  // namespace confbound
