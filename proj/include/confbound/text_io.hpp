#pragma once

// Result emission. Every file is written to a temporary sibling and renamed
// into place, so readers never observe a partial file. Doubles are printed
// with 17 significant digits, which round-trips exactly.

#include <string>
#include <vector>

#include "confbound/intervals.hpp"
#include "confbound/sweep.hpp"
#include "json.hpp"

namespace confbound {

void write_text_atomic(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

std::string format_double(double value);

// index,seed,bias,b_ut_1,b_uy_inf,bound
std::string sweep_csv(const std::vector<SweepRecord>& records);
std::vector<SweepRecord> parse_sweep_csv(const std::string& text);

// alpha,ir,zc,stderr_ir,stderr_zc; ir fields are empty when no ground truth.
std::string metric_csv(const MetricCurve& curve);
MetricCurve parse_metric_csv(const std::string& text);

struct IntervalRow {
  std::string unit_or_rep;
  double tau_igno = 0.0;
  double half_width = 0.0;
  // Interval at alpha = 1.
  double lower = 0.0;
  double upper = 0.0;
};

// unit_or_rep,tau_igno,half_width,lower,upper
std::string interval_csv(const std::vector<IntervalRow>& rows);

void emit_results(const std::vector<SweepRecord>& records, const std::string& path);
void emit_results(const MetricCurve& curve, const std::string& path);
void emit_results(const std::vector<IntervalRow>& rows, const std::string& path);
void emit_results(const nlohmann::json& doc, const std::string& path);

}  // namespace confbound
