#include "confbound/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "confbound/error.hpp"
#include "confbound/parallel.hpp"

namespace confbound {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CsvLayout {
  bool has_rep = false;
  std::size_t d = 0;
  bool has_ycf = false;
  bool has_mu = false;

  std::size_t x_offset() const { return has_rep ? 1 : 0; }
  std::size_t t_col() const { return x_offset() + d; }
  std::size_t yf_col() const { return t_col() + 1; }
  std::size_t ycf_col() const { return yf_col() + 1; }
  std::size_t mu0_col() const { return yf_col() + (has_ycf ? 2 : 1); }
  std::size_t width() const { return mu0_col() + (has_mu ? 2 : 0); }
};

CsvLayout parse_header(const std::vector<std::string>& cols) {
  CsvLayout layout;
  std::size_t pos = 0;
  if (pos < cols.size() && cols[pos] == "rep") {
    layout.has_rep = true;
    ++pos;
  }
  while (pos < cols.size() && cols[pos] == "x" + std::to_string(layout.d)) {
    ++layout.d;
    ++pos;
  }
  if (layout.d == 0) throw Error(ErrorKind::SchemaError, "no covariate columns x0..x{d-1}");
  auto expect = [&](const char* name) {
    if (pos >= cols.size() || cols[pos] != name) {
      throw Error(ErrorKind::SchemaError,
                  std::string("expected column '") + name + "' at position " +
                      std::to_string(pos) +
                      (pos < cols.size() ? ", found '" + cols[pos] + "'" : ", header ended"));
    }
    ++pos;
  };
  expect("t");
  expect("yf");
  if (pos < cols.size() && cols[pos] == "ycf") {
    layout.has_ycf = true;
    ++pos;
  }
  if (pos < cols.size() && cols[pos] == "mu0") {
    ++pos;
    expect("mu1");
    layout.has_mu = true;
  }
  if (pos != cols.size()) {
    throw Error(ErrorKind::SchemaError, "unexpected column '" + cols[pos] + "'");
  }
  if (layout.has_ycf && !layout.has_mu) {
    throw Error(ErrorKind::SchemaError, "ycf requires mu0 and mu1 columns");
  }
  return layout;
}

double parse_value(const std::string& field, std::size_t row, const std::string& column) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (field.empty() || end != begin + field.size()) {
    throw Error(ErrorKind::ValueError, "row " + std::to_string(row) + ", column '" + column +
                                           "': cannot parse '" + field + "'");
  }
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::ValueError, "row " + std::to_string(row) + ", column '" + column +
                                           "': non-finite value");
  }
  return v;
}

struct RepRows {
  std::vector<std::vector<double>> x;
  std::vector<int> t;
  std::vector<double> yf, ycf, mu0, mu1;
};

}  // namespace

TabularDataset::TabularDataset(Eigen::MatrixXd covariates, std::vector<int> treatment,
                               Eigen::VectorXd y_factual, std::optional<GroundTruth> truth,
                               int replication)
    : covariates_(std::move(covariates)),
      treatment_(std::move(treatment)),
      y_factual_(std::move(y_factual)),
      truth_(std::move(truth)),
      replication_(replication) {
  const auto n = static_cast<Eigen::Index>(treatment_.size());
  if (n < 1) throw Error(ErrorKind::EmptyInput, "dataset has no rows");
  if (covariates_.rows() != n || y_factual_.size() != n) {
    throw Error(ErrorKind::LengthMismatch, "covariates, treatment and outcome lengths differ");
  }
  if (covariates_.cols() < 1) throw Error(ErrorKind::SchemaError, "dataset has no covariates");
  for (std::size_t i = 0; i < treatment_.size(); ++i) {
    if (treatment_[i] != 0 && treatment_[i] != 1) {
      throw Error(ErrorKind::NonBinaryTreatment, "row " + std::to_string(i) + ": t = " +
                                                     std::to_string(treatment_[i]));
    }
  }
  if (!covariates_.allFinite() || !y_factual_.allFinite()) {
    throw Error(ErrorKind::ValueError, "non-finite covariate or outcome");
  }
  if (truth_) {
    if (truth_->mu0.size() != n || truth_->mu1.size() != n ||
        (truth_->y_cfactual && truth_->y_cfactual->size() != n)) {
      throw Error(ErrorKind::LengthMismatch, "ground-truth columns have the wrong length");
    }
  }
}

std::size_t TabularDataset::arm_count(int t) const {
  return static_cast<std::size_t>(std::count(treatment_.begin(), treatment_.end(), t));
}

double true_ate(const TabularDataset& data) { return true_cate(data).mean(); }

Eigen::VectorXd true_cate(const TabularDataset& data) {
  if (!data.has_truth()) throw Error(ErrorKind::SchemaError, "dataset has no mu0/mu1 columns");
  return data.truth()->mu1 - data.truth()->mu0;
}

std::vector<TabularDataset> parse_dataset_csv(std::istream& in) {
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw Error(ErrorKind::EmptyFile, "no header line");
  const auto header = split_csv_line(trim(line));
  const CsvLayout layout = parse_header(header);

  std::map<int, RepRows> reps;
  std::vector<int> rep_order;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_csv_line(trim(line));
    if (fields.size() != layout.width()) {
      throw Error(ErrorKind::SchemaError, "row " + std::to_string(row) + " has " +
                                              std::to_string(fields.size()) + " fields, expected " +
                                              std::to_string(layout.width()));
    }
    int rep = 0;
    if (layout.has_rep) {
      const double r = parse_value(fields[0], row, "rep");
      if (r != std::floor(r)) {
        throw Error(ErrorKind::ValueError, "row " + std::to_string(row) + ": rep must be an integer");
      }
      rep = static_cast<int>(r);
    }
    auto [it, inserted] = reps.try_emplace(rep);
    if (inserted) rep_order.push_back(rep);
    RepRows& rows = it->second;
    std::vector<double> x(layout.d);
    for (std::size_t k = 0; k < layout.d; ++k) {
      x[k] = parse_value(fields[layout.x_offset() + k], row, header[layout.x_offset() + k]);
    }
    rows.x.push_back(std::move(x));
    const double t = parse_value(fields[layout.t_col()], row, "t");
    if (t != 0.0 && t != 1.0) {
      throw Error(ErrorKind::ValueError, "row " + std::to_string(row) + ": treatment must be 0 or 1, got '" +
                                             fields[layout.t_col()] + "'");
    }
    rows.t.push_back(static_cast<int>(t));
    rows.yf.push_back(parse_value(fields[layout.yf_col()], row, "yf"));
    if (layout.has_ycf) rows.ycf.push_back(parse_value(fields[layout.ycf_col()], row, "ycf"));
    if (layout.has_mu) {
      rows.mu0.push_back(parse_value(fields[layout.mu0_col()], row, "mu0"));
      rows.mu1.push_back(parse_value(fields[layout.mu0_col() + 1], row, "mu1"));
    }
  }
  if (row == 0) throw Error(ErrorKind::EmptyFile, "header present but no data rows");

  std::vector<TabularDataset> out;
  for (int rep : rep_order) {
    RepRows& rows = reps.at(rep);
    const auto n = static_cast<Eigen::Index>(rows.t.size());
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(layout.d));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < x.cols(); ++k) x(i, k) = rows.x[i][k];
    }
    auto to_vec = [](const std::vector<double>& v) {
      return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    std::optional<GroundTruth> truth;
    if (layout.has_mu) {
      truth = GroundTruth{};
      truth->mu0 = to_vec(rows.mu0);
      truth->mu1 = to_vec(rows.mu1);
      if (layout.has_ycf) truth->y_cfactual = to_vec(rows.ycf);
    }
    out.emplace_back(std::move(x), std::move(rows.t), to_vec(rows.yf), std::move(truth), rep);
  }
  return out;
}

std::vector<TabularDataset> load_dataset(const std::string& path, DataFormat format) {
  if (format != DataFormat::Csv) throw Error(ErrorKind::SchemaError, "unsupported format");
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  return parse_dataset_csv(in);
}

std::string dataset_to_csv(const std::vector<TabularDataset>& datasets) {
  if (datasets.empty()) throw Error(ErrorKind::EmptyInput, "no datasets to write");
  const std::size_t d = datasets.front().dims();
  const bool has_mu = datasets.front().has_truth();
  const bool has_ycf = has_mu && datasets.front().truth()->y_cfactual.has_value();
  std::ostringstream out;
  out << "rep";
  for (std::size_t k = 0; k < d; ++k) out << ",x" << k;
  out << ",t,yf";
  if (has_ycf) out << ",ycf";
  if (has_mu) out << ",mu0,mu1";
  out << '\n';
  for (const auto& ds : datasets) {
    if (ds.dims() != d || ds.has_truth() != has_mu ||
        (has_mu && ds.truth()->y_cfactual.has_value() != has_ycf)) {
      throw Error(ErrorKind::SchemaError, "replications disagree on column layout");
    }
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      out << ds.replication();
      for (std::size_t k = 0; k < d; ++k) out << ',' << fmt(ds.covariates()(r, static_cast<Eigen::Index>(k)));
      out << ',' << ds.treatment()[i] << ',' << fmt(ds.y_factual()(r));
      if (has_ycf) out << ',' << fmt((*ds.truth()->y_cfactual)(r));
      if (has_mu) out << ',' << fmt(ds.truth()->mu0(r)) << ',' << fmt(ds.truth()->mu1(r));
      out << '\n';
    }
  }
  return out.str();
}

HiddenConfounderView::HiddenConfounderView(const TabularDataset& base, std::vector<std::size_t> hidden)
    : base_(&base), hidden_(std::move(hidden)) {
  std::sort(hidden_.begin(), hidden_.end());
  hidden_.erase(std::unique(hidden_.begin(), hidden_.end()), hidden_.end());
  for (std::size_t j : hidden_) {
    if (j >= base.dims()) {
      throw Error(ErrorKind::IndexOutOfRange, "hidden column " + std::to_string(j) +
                                                  " out of range for d = " + std::to_string(base.dims()));
    }
  }
  for (std::size_t k = 0; k < base.dims(); ++k) {
    if (!std::binary_search(hidden_.begin(), hidden_.end(), k)) exposed_.push_back(k);
  }
  if (exposed_.empty()) throw Error(ErrorKind::IndexOutOfRange, "cannot hide every covariate");
}

TabularDataset HiddenConfounderView::exposed() const {
  const auto& x = base_->covariates();
  Eigen::MatrixXd reduced(x.rows(), static_cast<Eigen::Index>(exposed_.size()));
  for (std::size_t k = 0; k < exposed_.size(); ++k) {
    reduced.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(exposed_[k]));
  }
  return TabularDataset(std::move(reduced), base_->treatment(), base_->y_factual(), base_->truth(),
                        base_->replication());
}

HiddenConfounderView hide_covariate(const TabularDataset& data, std::size_t j) {
  return HiddenConfounderView(data, {j});
}

void GeneratorConfig::validate() const {
  if (n < 2) throw Error(ErrorKind::InvalidConfig, "generator needs n >= 2");
  if (d < 2) throw Error(ErrorKind::InvalidConfig, "generator needs d >= 2");
  if (!(noise_sd >= 0.0)) throw Error(ErrorKind::InvalidConfig, "noise_sd must be >= 0");
  if (!(clip > 0.0)) throw Error(ErrorKind::InvalidConfig, "clip must be > 0");
}

TabularDataset generate_confounded(const GeneratorConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(config.n);
  const auto d = static_cast<Eigen::Index>(config.d);

  Eigen::MatrixXd x(n, d);
  std::vector<int> t(config.n);
  Eigen::VectorXd yf(n), ycf(n), mu0(n), mu1(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) x(i, k) = std::clamp(normal(rng), -config.clip, config.clip);
    const double observed = x.row(i).tail(d - 1).sum();
    const double logit = config.confounder_strength_t * x(i, 0) + config.observed_strength * observed;
    t[i] = unit(rng) < 1.0 / (1.0 + std::exp(-logit)) ? 1 : 0;
    mu0(i) = config.confounder_strength_y * x(i, 0) + config.observed_strength * observed;
    mu1(i) = mu0(i) + config.treatment_effect + config.effect_heterogeneity * x(i, 1);
    const double noise_f = config.noise_sd * normal(rng);
    const double noise_cf = config.noise_sd * normal(rng);
    yf(i) = (t[i] == 1 ? mu1(i) : mu0(i)) + noise_f;
    ycf(i) = (t[i] == 1 ? mu0(i) : mu1(i)) + noise_cf;
  }
  GroundTruth truth{ycf, mu0, mu1};
  return TabularDataset(std::move(x), std::move(t), std::move(yf), std::move(truth), config.replication);
}

std::vector<TabularDataset> generate_replications(const GeneratorConfig& config, std::size_t count) {
  std::vector<TabularDataset> out;
  out.reserve(count);
  for (std::size_t r = 0; r < count; ++r) {
    GeneratorConfig rep_config = config;
    rep_config.seed = derive_seed(config.seed, r);
    rep_config.replication = static_cast<int>(r);
    out.push_back(generate_confounded(rep_config));
  }
  return out;
}

}  // namespace confbound
