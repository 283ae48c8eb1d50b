#include "confbound/text_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "confbound/error.hpp"

namespace confbound {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw Error(ErrorKind::ValueError, "bad number '" + s + "'");
  return v;
}

void expect_header(const std::vector<std::string>& lines, const char* header) {
  if (lines.empty() || lines.front() != header) {
    throw Error(ErrorKind::SchemaError, std::string("expected header '") + header + "'");
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::IoError, "write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::IoError, "cannot move output into '" + path + "'");
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sweep_csv(const std::vector<SweepRecord>& records) {
  std::string out = "index,seed,bias,b_ut_1,b_uy_inf,bound\n";
  for (const auto& r : records) {
    out += std::to_string(r.index) + ',' + std::to_string(r.seed) + ',' + format_double(r.bias) + ',' +
           format_double(r.b_ut_1) + ',' + format_double(r.b_uy_inf) + ',' + format_double(r.bound) + '\n';
  }
  return out;
}

std::vector<SweepRecord> parse_sweep_csv(const std::string& text) {
  const auto lines = lines_of(text);
  expect_header(lines, "index,seed,bias,b_ut_1,b_uy_inf,bound");
  std::vector<SweepRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i]);
    if (f.size() != 6) throw Error(ErrorKind::SchemaError, "sweep row " + std::to_string(i) + " needs 6 fields");
    SweepRecord r;
    r.index = std::stoull(f[0]);
    r.seed = std::stoull(f[1]);
    r.bias = to_double(f[2]);
    r.b_ut_1 = to_double(f[3]);
    r.b_uy_inf = to_double(f[4]);
    r.bound = to_double(f[5]);
    out.push_back(r);
  }
  return out;
}

std::string metric_csv(const MetricCurve& curve) {
  std::string out = "alpha,ir,zc,stderr_ir,stderr_zc\n";
  for (const auto& p : curve) {
    out += format_double(p.alpha) + ',' + (p.has_inclusion ? format_double(p.inclusion_rate) : "") + ',' +
           format_double(p.zero_crossing_rate) + ',' + (p.has_inclusion ? format_double(p.stderr_ir) : "") +
           ',' + format_double(p.stderr_zc) + '\n';
  }
  return out;
}

MetricCurve parse_metric_csv(const std::string& text) {
  const auto lines = lines_of(text);
  expect_header(lines, "alpha,ir,zc,stderr_ir,stderr_zc");
  MetricCurve out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i]);
    if (f.size() != 5) throw Error(ErrorKind::SchemaError, "metric row " + std::to_string(i) + " needs 5 fields");
    MetricPoint p;
    p.alpha = to_double(f[0]);
    p.has_inclusion = !f[1].empty();
    if (p.has_inclusion) {
      p.inclusion_rate = to_double(f[1]);
      p.stderr_ir = to_double(f[3]);
    }
    p.zero_crossing_rate = to_double(f[2]);
    p.stderr_zc = to_double(f[4]);
    out.push_back(p);
  }
  return out;
}

std::string interval_csv(const std::vector<IntervalRow>& rows) {
  std::string out = "unit_or_rep,tau_igno,half_width,lower,upper\n";
  for (const auto& r : rows) {
    out += r.unit_or_rep + ',' + format_double(r.tau_igno) + ',' + format_double(r.half_width) + ',' +
           format_double(r.lower) + ',' + format_double(r.upper) + '\n';
  }
  return out;
}

void emit_results(const std::vector<SweepRecord>& records, const std::string& path) {
  write_text_atomic(path, sweep_csv(records));
}

void emit_results(const MetricCurve& curve, const std::string& path) { write_text_atomic(path, metric_csv(curve)); }

void emit_results(const std::vector<IntervalRow>& rows, const std::string& path) {
  write_text_atomic(path, interval_csv(rows));
}

void emit_results(const nlohmann::json& doc, const std::string& path) { write_text_atomic(path, doc.dump(2) + "\n"); }

}  // namespace confbound
