// Acceptance suite: one PASS/FAIL/SKIPPED line per primary criterion.
// Exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>

#include "confbound/calibration.hpp"
#include "confbound/discrete.hpp"
#include "confbound/error.hpp"
#include "confbound/pipeline.hpp"
#include "confbound/sweep.hpp"
#include "oracle.hpp"

using namespace confbound;

namespace {

enum class Status { Pass, Fail, Skipped };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::Pass : Status::Fail, std::move(detail)}; }

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

int failures = 0;

void run(const char* name, const std::function<Outcome()>& criterion) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = criterion();
  } catch (const std::exception& e) {
    out = {Status::Fail, std::string("exception: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const char* label = out.status == Status::Pass ? "PASS" : out.status == Status::Fail ? "FAIL" : "SKIPPED";
  if (out.status == Status::Fail) ++failures;
  std::printf("%-7s %s (%s; %.1fs)\n", label, name, out.detail.c_str(), seconds);
  std::fflush(stdout);
}

Outcome sweep_dominance() {
  std::string detail;
  bool ok = true;
  for (const auto dims : {std::array<std::size_t, 3>{2, 2, 2}, std::array<std::size_t, 3>{4, 4, 2}}) {
    SweepConfig cfg;
    cfg.dims = dims;
    cfg.base_seed = 20230601;
    const auto start = std::chrono::steady_clock::now();
    const auto records = run_sweep(cfg);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::size_t violations = 0;
    for (const auto& r : records) violations += r.bias > r.bound + 1e-9 ? 1 : 0;
    ok = ok && records.size() == 30000 && violations == 0 && seconds < 60.0;
    detail += fmt("%zux%zux%zu: %zu records, %zu violations, %.1fs; ", dims[0], dims[1], dims[2], records.size(),
                  violations, seconds);
  }
  return verdict(ok, detail.substr(0, detail.size() - 2));
}

Outcome j1_oracle() {
  const auto j = oracle::j1();
  const auto e = oracle::enumerate(j, 1);
  double l1 = 0.0, l2_ut = 0.0, sup = 0.0, l2_uy = 0.0;
  for (std::size_t u = 0; u < 2; ++u) {
    const double d = e.p_u_given_t[u] - e.p_u[u];
    const double g = e.mean_tu[u] - e.obs;
    l1 += std::abs(d);
    l2_ut += d * d;
    sup = std::max(sup, std::abs(g));
    l2_uy += g * g;
  }
  const double l2_bound = std::sqrt(l2_ut) * std::sqrt(l2_uy);
  const double worst = std::max({std::abs(obs_expectation(j, 1) - e.obs), std::abs(do_expectation(j, 1) - e.do_),
                                 std::abs(confounding_bias(j, 1) - std::abs(e.obs - e.do_)),
                                 std::abs(b_ut(j, 1, Exponent::finite(1)) - l1),
                                 std::abs(b_uy(j, 1, Exponent::infinity()) - sup),
                                 std::abs(tv_bound(j, 1).bound - l1 * sup),
                                 std::abs(holder_bound(j, 1, ConjugatePair::from_p(Exponent::finite(2))).bound -
                                          l2_bound)});
  const double hand = std::max({std::abs(e.obs - 0.82), std::abs(e.do_ - 0.70), std::abs(l1 - 0.6),
                                std::abs(sup - 0.32), std::abs(l1 * sup - 0.192)});
  return verdict(worst < 1e-12 && hand < 1e-12 && std::abs(l2_bound - 0.139945) < 5e-6,
                 fmt("max engine-oracle gap %.2e, hand-value gap %.2e, L2 bound %.8f", worst, hand, l2_bound));
}

Outcome zero_cases() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    for (const auto s : {oracle::Structure::UIndependentOfT, oracle::Structure::UIndependentOfYGivenT}) {
      const auto j = oracle::random_joint(rng, oracle::random_dims(rng), s);
      for (std::size_t t = 0; t < j.k_t(); ++t) {
        worst = std::max({worst, tv_bound(j, t).bound, confounding_bias(j, t)});
      }
    }
  }
  return verdict(worst <= 1e-12, fmt("2000 joints, max bound/bias %.2e", worst));
}

Outcome pivotal_identity() {
  std::mt19937_64 rng(102);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto j = oracle::random_joint(rng, oracle::random_dims(rng));
    for (std::size_t t = 0; t < j.k_t(); ++t) {
      const auto marginal = marginal_u(j);
      const auto cond = cond_u_given_t(j, t);
      const auto means = cond_outcome_mean(j, t);
      const double obs = obs_expectation(j, t);
      double lhs = 0.0;
      for (std::size_t u = 0; u < j.k_u(); ++u) lhs += (cond[u] - marginal[u]) * (means[u] - obs);
      worst = std::max(worst, std::abs(lhs - (obs - do_expectation(j, t))));
    }
  }
  return verdict(worst <= 1e-12, fmt("1000 joints, max gap %.2e", worst));
}

Outcome norm_sandwich() {
  std::mt19937_64 rng(103);
  std::size_t violations = 0, checks = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto j = oracle::random_joint(rng, oracle::random_dims(rng));
    const double ku = static_cast<double>(j.k_u());
    for (std::size_t t = 0; t < j.k_t(); ++t) {
      const double uy_max = b_uy(j, t, Exponent::infinity());
      const double ut_max = b_ut(j, t, Exponent::infinity());
      for (double q : {1.0, 2.0, 4.0, 8.0, 64.0}) {
        const double uy = b_uy(j, t, Exponent::finite(q));
        const double ut = b_ut(j, t, Exponent::finite(q));
        const double grow = std::pow(ku, 1.0 / q);
        violations += uy_max <= uy && uy <= uy_max * grow ? 0 : 1;
        violations += ut_max <= ut && ut <= ut_max * grow ? 0 : 1;
        checks += 2;
      }
    }
  }
  return verdict(violations == 0, fmt("%zu violations in %zu comparisons", violations, checks));
}

Outcome tv_estimator() {
  // X uniform on {0,1}, p(T=1|x) = (0.2, 0.8): TV[p(X), p(X|T=1)] = 0.3.
  double total_error = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    const Eigen::Index n = 10000;
    Eigen::MatrixXd x(n, 1);
    std::vector<int> t(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool xi = coin(rng);
      x(i, 0) = xi ? 1.0 : 0.0;
      t[static_cast<std::size_t>(i)] = std::bernoulli_distribution(xi ? 0.8 : 0.2)(rng) ? 1 : 0;
    }
    const TabularDataset data(x, t, Eigen::VectorXd::Zero(n));
    TrainConfig cfg;
    cfg.seed = seed;
    const auto model = fit_propensity(data, CovariateMask::all(1), cfg);
    total_error += std::abs(tv_marginal_estimate(data, model, 1) - 0.3);
  }
  const double mean_error = total_error / 20.0;
  return verdict(mean_error < 0.02, fmt("mean |error| over 20 seeds %.4f", mean_error));
}

template <class Loss>
double gradient_error(const Loss& loss, const Eigen::VectorXd& params) {
  Eigen::VectorXd analytic;
  loss(params, &analytic);
  Eigen::VectorXd numeric(params.size());
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    Eigen::VectorXd up = params, down = params;
    up(i) += 1e-6;
    down(i) -= 1e-6;
    numeric(i) = (loss(up, nullptr) - loss(down, nullptr)) / 2e-6;
  }
  return (analytic - numeric).norm() / std::max({analytic.norm(), numeric.norm(), 1e-12});
}

Outcome gradient_checks() {
  std::mt19937_64 rng(104);
  std::normal_distribution<double> z;
  double worst_prop = 0.0, worst_out = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd x(8, 3);
    for (Eigen::Index i = 0; i < 8; ++i) {
      for (Eigen::Index k = 0; k < 3; ++k) x(i, k) = z(rng);
    }
    std::vector<int> t{0, 1, 1, 0, 1, 0, 0, 1};
    Eigen::VectorXd tv(8), y(8);
    for (int i = 0; i < 8; ++i) {
      tv(i) = t[static_cast<std::size_t>(i)];
      y(i) = z(rng);
    }
    const PropensityLoss prop(x, tv);
    const OutcomeLoss out(x, t, y);
    Eigen::VectorXd pp(prop.parameter_count()), op(out.parameter_count());
    for (auto& v : pp) v = z(rng);
    for (auto& v : op) v = z(rng);
    worst_prop = std::max(worst_prop, gradient_error(prop, pp));
    worst_out = std::max(worst_out, gradient_error(out, op));
  }
  return verdict(worst_prop < 1e-5 && worst_out < 1e-5,
                 fmt("50 instances, worst relative error propensity %.2e, outcome %.2e", worst_prop, worst_out));
}

Outcome containment() {
  std::mt19937_64 rng(105);
  std::size_t contained = 0;
  for (int i = 0; i < 10000; ++i) {
    auto dims = oracle::random_dims(rng);
    const auto j = oracle::random_joint(rng, dims);
    // Independent oracle: enumeration for both arms.
    double tau_ate = 0.0, tau_igno = 0.0, width = 0.0;
    for (std::size_t t : {std::size_t{1}, std::size_t{0}}) {
      const auto e = oracle::enumerate(j, t);
      const double sign = t == 1 ? 1.0 : -1.0;
      tau_ate += sign * e.do_;
      tau_igno += sign * e.obs;
      double l1 = 0.0, sup = 0.0;
      for (std::size_t u = 0; u < j.k_u(); ++u) {
        l1 += std::abs(e.p_u_given_t[u] - e.p_u[u]);
        sup = std::max(sup, std::abs(e.mean_tu[u] - e.obs));
      }
      width += l1 * sup;
    }
    const auto engine = ate_exact(j, 1, 0);
    const bool agrees = std::abs(engine.half_width - width) < 1e-12 && std::abs(engine.tau_ate - tau_ate) < 1e-12;
    contained += agrees && std::abs(tau_ate - tau_igno) <= width ? 1 : 0;
  }
  return verdict(contained == 10000, fmt("%zu/10000 contained", contained));
}

struct EndToEnd {
  AteResult ate;
  CateResult cate;
  double seconds = 0.0;
};

const EndToEnd& end_to_end() {
  static const EndToEnd result = [] {
    EndToEnd r;
    const auto start = std::chrono::steady_clock::now();
    GeneratorConfig g;
    g.seed = 500;
    const auto reps = generate_replications(g, 100);
    AteConfig cfg;
    cfg.hide_col = 0;
    cfg.train.seed = 1;
    r.ate = run_ate_pipeline(reps, cfg);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CatePipelineConfig cate;
    cate.hide_col = 0;
    cate.cate.train.seed = 2;
    r.cate = run_cate_pipeline(reps.front(), cate);
    return r;
  }();
  return result;
}

Outcome metric_monotonicity() {
  const auto& r = end_to_end();
  const bool ok = is_monotone(r.ate.curve) && is_monotone(r.cate.curve) &&
                  r.ate.curve.size() == default_ate_alphas().size() &&
                  r.cate.curve.size() == default_cate_alphas().size();
  return verdict(ok, fmt("ATE curve %zu points, CATE curve %zu points", r.ate.curve.size(), r.cate.curve.size()));
}

Outcome end_to_end_ate() {
  const auto& r = end_to_end();
  std::size_t included = 0, used = 0;
  for (const auto& rep : r.ate.replications) {
    if (rep.skipped || !rep.true_ate) continue;
    ++used;
    included += EffectInterval(rep.tau_igno, rep.half_width, 1.0).contains(*rep.true_ate) ? 1 : 0;
  }
  const auto& at1 = point_at(r.ate.curve, 1.0);
  return verdict(used == 100 && included >= 90 && r.seconds < 600.0,
                 fmt("%zu/%zu included at alpha=1, ZC(1)=%.2f, %.1fs", included, used, at1.zero_crossing_rate,
                     r.seconds));
}

Outcome ihdp() {
  const char* path = std::getenv("CONFBOUND_IHDP_CSV");
  if (path == nullptr || *path == '\0') return {Status::Skipped, "set CONFBOUND_IHDP_CSV to a converted IHDP file"};
  const auto reps = load_dataset(path);
  AteConfig cfg;
  cfg.hide_col = 9;
  const auto ate = run_ate_pipeline(reps, cfg);
  const auto& a = point_at(ate.curve, 1.0);
  const TabularDataset* first = &reps.front();
  for (const auto& d : reps) {
    if (d.replication() == 1) {
      first = &d;
      break;
    }
  }
  CatePipelineConfig cate_cfg;
  cate_cfg.hide_col = 9;
  const auto cate = run_cate_pipeline(*first, cate_cfg);
  const auto& c = point_at(cate.curve, 1.0);
  const bool ok = a.inclusion_rate >= 0.95 && std::abs(a.zero_crossing_rate - 0.31) <= 0.10 &&
                  std::abs(c.inclusion_rate - 0.96) <= 0.05 && std::abs(c.zero_crossing_rate - 0.28) <= 0.10;
  return verdict(ok, fmt("ATE IR %.2f ZC %.2f; CATE IR %.2f ZC %.2f", a.inclusion_rate, a.zero_crossing_rate,
                         c.inclusion_rate, c.zero_crossing_rate));
}

}  // namespace

int main() {
  run("bound dominance over 30,000 Dirichlet joints (2x2x2 and 4x4x2)", sweep_dominance);
  run("J1 values match the enumeration oracle", j1_oracle);
  run("zero-case tightness (U indep. T, U indep. Y given T)", zero_cases);
  run("pivotal bias identity on 1,000 joints", pivotal_identity);
  run("norm sandwich for p, q in {1,2,4,8,64}", norm_sandwich);
  run("TV estimator on the two-value design", tv_estimator);
  run("analytic gradients vs finite differences", gradient_checks);
  run("exact ATE inside the half-width interval on 10,000 joints", containment);
  run("IR and ZC nondecreasing in alpha", metric_monotonicity);
  run("end-to-end synthetic ATE pipeline", end_to_end_ate);
  run("IHDP reproduction", ihdp);
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
