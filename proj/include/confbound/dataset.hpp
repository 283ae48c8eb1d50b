#pragma once

// Tabular observational data with an optional ground-truth block, plus the
// CSV schema used to exchange it:
//
//   rep,x0,...,x{d-1},t,yf[,ycf][,mu0,mu1]
//
// `rep` is optional and defaults to 0. Rows of one replication need not be
// contiguous; replications are returned in order of first appearance.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace confbound {

struct GroundTruth {
  std::optional<Eigen::VectorXd> y_cfactual;
  // Noiseless expected potential outcomes.
  Eigen::VectorXd mu0;
  Eigen::VectorXd mu1;
};

class TabularDataset {
 public:
  TabularDataset(Eigen::MatrixXd covariates, std::vector<int> treatment,
                 Eigen::VectorXd y_factual, std::optional<GroundTruth> truth = std::nullopt,
                 int replication = 0);

  std::size_t size() const noexcept { return treatment_.size(); }
  std::size_t dims() const noexcept { return static_cast<std::size_t>(covariates_.cols()); }

  const Eigen::MatrixXd& covariates() const noexcept { return covariates_; }
  const std::vector<int>& treatment() const noexcept { return treatment_; }
  const Eigen::VectorXd& y_factual() const noexcept { return y_factual_; }
  const std::optional<GroundTruth>& truth() const noexcept { return truth_; }
  int replication() const noexcept { return replication_; }

  bool has_truth() const noexcept { return truth_.has_value(); }
  std::size_t arm_count(int t) const;

 private:
  Eigen::MatrixXd covariates_;
  std::vector<int> treatment_;
  Eigen::VectorXd y_factual_;
  std::optional<GroundTruth> truth_;
  int replication_;
};

// mean(mu1 - mu0); throws SchemaError without ground truth.
double true_ate(const TabularDataset& data);
// mu1 - mu0 per row.
Eigen::VectorXd true_cate(const TabularDataset& data);

enum class DataFormat { Csv };

std::vector<TabularDataset> load_dataset(const std::string& path, DataFormat format = DataFormat::Csv);
std::vector<TabularDataset> parse_dataset_csv(std::istream& in);
std::string dataset_to_csv(const std::vector<TabularDataset>& datasets);

// A dataset with some covariate columns withheld from every consumer. The
// withheld columns play the role of unobserved confounders; ground truth is
// carried through untouched.
class HiddenConfounderView {
 public:
  HiddenConfounderView(const TabularDataset& base, std::vector<std::size_t> hidden);

  const TabularDataset& base() const noexcept { return *base_; }
  const std::vector<std::size_t>& hidden() const noexcept { return hidden_; }
  const std::vector<std::size_t>& exposed_columns() const noexcept { return exposed_; }
  std::size_t exposed_dims() const noexcept { return exposed_.size(); }

  // Copy of the base dataset restricted to the exposed columns.
  TabularDataset exposed() const;

 private:
  const TabularDataset* base_;
  std::vector<std::size_t> hidden_;
  std::vector<std::size_t> exposed_;
};

HiddenConfounderView hide_covariate(const TabularDataset& data, std::size_t j);

// Linear-logistic confounded data. Dimension 0 is the confounder meant to be
// hidden; the remaining dimensions act as observed confounders.
//
//   x      ~ N(0, I), clipped to [-clip, clip]
//   logit  = strength_t * x0 + observed_strength * sum_{k>=1} x_k
//   mu0(x) = strength_y * x0 + observed_strength * sum_{k>=1} x_k
//   mu1(x) = mu0(x) + treatment_effect + effect_heterogeneity * x1
//
// The true ATE is treatment_effect since clipping keeps x1 symmetric.
struct GeneratorConfig {
  std::size_t n = 500;
  std::size_t d = 5;
  double confounder_strength_t = 2.0;
  double confounder_strength_y = 2.0;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;
  double observed_strength = 1.0;
  double treatment_effect = 1.0;
  double effect_heterogeneity = 0.5;
  double clip = 3.0;
  int replication = 0;

  void validate() const;
};

TabularDataset generate_confounded(const GeneratorConfig& config);

// `count` replications with seeds derived from config.seed.
std::vector<TabularDataset> generate_replications(const GeneratorConfig& config,
                                                  std::size_t count);

}  // namespace confbound
