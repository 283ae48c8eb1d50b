// confbound: command-line front end for exact bounds, synthetic sweeps and
// the ATE / CATE interval pipelines.
//
// Exit codes: 0 success, 2 malformed input or configuration, 3 numeric or
// runtime degeneracy. Progress goes to stderr; reports go to stdout or files.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "confbound/discrete.hpp"
#include "confbound/error.hpp"
#include "confbound/pipeline.hpp"
#include "confbound/sweep.hpp"
#include "confbound/text_io.hpp"
#include "json.hpp"

using namespace confbound;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestSchema = "confbound.manifest/1";
constexpr const char* kArtifactVersion = "0.1.0";
constexpr const char* kOutDirEnv = "CONFBOUND_OUT_DIR";

// FNV-1a over the file bytes; identifies inputs in the manifest.
std::string content_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string resolve_out_dir(const std::string& flag) {
  std::string dir = flag;
  if (dir.empty()) {
    const char* env = std::getenv(kOutDirEnv);
    dir = env != nullptr && *env != '\0' ? env : ".";
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create output directory " + dir + ": " + ec.message());
  return dir;
}

std::string out_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_manifest(const std::string& dir, const std::string& command, json config, json seeds, json inputs,
                    const std::vector<std::string>& outputs) {
  json doc{{"schema", kManifestSchema},
           {"artifact_version", kArtifactVersion},
           {"command", command},
           {"config", std::move(config)},
           {"seeds", std::move(seeds)},
           {"inputs", std::move(inputs)},
           {"outputs", outputs}};
  emit_results(doc, out_path(dir, "manifest.json"));
}

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      dims.push_back(static_cast<std::size_t>(v));
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::InvalidConfig, "--dims entries must be positive integers, got '" + item + "'");
    }
  }
  if (dims.size() != 3) throw Error(ErrorKind::InvalidConfig, "--dims takes K_U,K_T,K_Y");
  return dims;
}

json train_json(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate}, {"epochs", t.epochs}, {"seed", t.seed},
          {"beta1", t.beta1},                 {"beta2", t.beta2},   {"epsilon", t.epsilon}};
}

json optional_json(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

// ---- bound -----------------------------------------------------------------

struct BoundArgs {
  std::string joint;
  std::string p;
  bool grid = false;
  std::optional<std::size_t> t;
  std::string out;
};

int cmd_bound(const BoundArgs& a) {
  const std::string text = read_text(a.joint);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::SchemaError, std::string("joint file is not valid JSON: ") + e.what());
  }
  const auto joint = joint_from_json(doc);
  std::vector<std::size_t> arms;
  if (a.t) {
    if (*a.t >= joint.k_t()) throw Error(ErrorKind::IndexOutOfRange, "--t exceeds the number of treatment levels");
    arms.push_back(*a.t);
  } else {
    for (std::size_t t = 0; t < joint.k_t(); ++t) arms.push_back(t);
  }
  const auto p_grid = default_p_grid();
  json report{{"joint_hash", content_hash(text)}, {"arms", json::array()}};
  for (const std::size_t t : arms) {
    json arm{{"t", t}, {"tv", to_json(tv_bound(joint, t))}};
    if (!a.p.empty()) arm["holder"] = to_json(holder_bound(joint, t, ConjugatePair::from_p(Exponent::parse(a.p))));
    if (a.grid) {
      // The infimum over all conjugate pairs may fall between grid points.
      json tight = to_json(tightest_bound_grid(joint, t, p_grid));
      tight["approximation"] = "minimum over a finite exponent grid";
      tight["p_grid"] = json::array();
      for (const auto& p : p_grid) tight["p_grid"].push_back(p.to_string());
      arm["tightest_on_grid"] = std::move(tight);
    }
    report["arms"].push_back(std::move(arm));
  }
  if (joint.k_t() >= 2) {
    const auto ate = ate_exact(joint, 1, 0);
    report["ate_1_vs_0"] = {{"tau_ate", ate.tau_ate}, {"tau_igno", ate.tau_igno}, {"half_width", ate.half_width}};
  }
  std::cout << report.dump(2) << '\n';
  if (!a.out.empty()) {
    const std::string dir = resolve_out_dir(a.out);
    emit_results(report, out_path(dir, "bound.json"));
    json config{{"joint", a.joint}, {"p", a.p.empty() ? json(nullptr) : json(a.p)}, {"grid", a.grid},
                {"t", optional_json(a.t)}};
    write_manifest(dir, "bound", config, json::object(), {{{"path", a.joint}, {"hash", content_hash(text)}}},
                   {"bound.json"});
  }
  return 0;
}

// ---- sweep -----------------------------------------------------------------

struct SweepArgs {
  SweepConfig cfg;
  std::string dims = "2,2,2";
  std::string out;
};

int cmd_sweep(SweepArgs a) {
  const auto dims = parse_dims(a.dims);
  a.cfg.dims = {dims[0], dims[1], dims[2]};
  a.cfg.validate();
  const std::string dir = resolve_out_dir(a.out);
  std::cerr << "sweep: drawing " << a.cfg.n_samples << " joints\n";
  const auto records = run_sweep(a.cfg);
  const auto summary = summarize_sweep(records);
  std::cerr << "sweep: dominance violations " << summary.dominance_violations << '\n';
  emit_results(records, out_path(dir, "records.csv"));
  emit_results(to_json(summary), out_path(dir, "summary.json"));
  write_manifest(dir, "sweep", to_json(a.cfg), {{"base_seed", a.cfg.base_seed}}, json::array(),
                 {"records.csv", "summary.json"});
  return 0;
}

// ---- ate / cate --------------------------------------------------------------

struct DataArgs {
  std::string data;
  std::optional<std::size_t> hide_col;
  std::string alphas;
  std::uint64_t seed = 0;
  std::size_t epochs = TrainConfig{}.epochs;
  std::size_t workers = 0;
  std::string out;
};

int cmd_ate(const DataArgs& a) {
  AteConfig cfg;
  cfg.hide_col = a.hide_col;
  if (!a.alphas.empty()) cfg.alphas = parse_alpha_grid(a.alphas);
  cfg.train.seed = a.seed;
  cfg.train.epochs = a.epochs;
  cfg.train.validate();
  cfg.workers = a.workers;
  const std::string dir = resolve_out_dir(a.out);
  const std::string text = read_text(a.data);
  const auto datasets = load_dataset(a.data);
  std::cerr << "ate: " << datasets.size() << " replication(s)\n";
  const auto result = run_ate_pipeline(datasets, cfg);
  for (const auto& rep : result.replications) {
    if (rep.skipped) std::cerr << "ate: skipped replication " << rep.replication << ": " << rep.skip_reason << '\n';
  }
  emit_results(interval_rows(result), out_path(dir, "intervals.csv"));
  emit_results(result.curve, out_path(dir, "metrics.csv"));
  emit_results(calibration_report(result), out_path(dir, "calibration.json"));
  json config{{"data", a.data},       {"hide_col", optional_json(a.hide_col)}, {"alphas", cfg.alphas},
              {"train", train_json(cfg.train)}, {"workers", a.workers}};
  json seeds{{"seed", a.seed},
             {"derivation", "replication r: propensity derive_seed(derive_seed(seed, r), 1), "
                            "outcome derive_seed(derive_seed(seed, r), 2)"}};
  write_manifest(dir, "ate", config, seeds, {{{"path", a.data}, {"hash", content_hash(text)}}},
                 {"intervals.csv", "metrics.csv", "calibration.json"});
  return 0;
}

struct CateArgs {
  DataArgs base;
  std::optional<int> rep;
  std::optional<std::size_t> max_hide_dims;
  std::optional<double> epsilon;
};

int cmd_cate(const CateArgs& c) {
  const auto& a = c.base;
  CatePipelineConfig cfg;
  cfg.hide_col = a.hide_col;
  if (!a.alphas.empty()) cfg.alphas = parse_alpha_grid(a.alphas);
  cfg.cate.train.seed = a.seed;
  cfg.cate.train.epochs = a.epochs;
  cfg.cate.train.validate();
  cfg.cate.max_hide_dims = c.max_hide_dims;
  cfg.cate.neighborhood_epsilon = c.epsilon;
  cfg.cate.workers = a.workers;
  const std::string dir = resolve_out_dir(a.out);
  const std::string text = read_text(a.data);
  const auto datasets = load_dataset(a.data);
  const TabularDataset* chosen = c.rep ? nullptr : &datasets.front();
  for (const auto& d : datasets) {
    if (c.rep && d.replication() == *c.rep) chosen = &d;
  }
  if (chosen == nullptr) {
    throw Error(ErrorKind::IndexOutOfRange, "replication " + std::to_string(*c.rep) + " not found");
  }
  std::cerr << "cate: replication " << chosen->replication() << ", " << chosen->size() << " samples\n";
  const auto result = run_cate_pipeline(*chosen, cfg);
  std::cerr << "cate: refit " << result.scanned.size() << " hidden-dimension model pair(s)\n";
  emit_results(interval_rows(result), out_path(dir, "intervals.csv"));
  emit_results(result.curve, out_path(dir, "metrics.csv"));
  emit_results(calibration_report(result), out_path(dir, "calibration.json"));
  json config{{"data", a.data},
              {"rep", chosen->replication()},
              {"hide_col", optional_json(a.hide_col)},
              {"alphas", cfg.alphas},
              {"max_hide_dims", optional_json(c.max_hide_dims)},
              {"neighborhood_epsilon", c.epsilon ? json(*c.epsilon) : json(nullptr)},
              {"train", train_json(cfg.cate.train)},
              {"workers", a.workers}};
  json seeds{{"seed", a.seed},
             {"derivation", "full propensity derive_seed(seed, 1), full outcome derive_seed(seed, 2), "
                            "reduced models derive_seed(derive_seed(seed, 3|4), j)"}};
  write_manifest(dir, "cate", config, seeds, {{{"path", a.data}, {"hash", content_hash(text)}}},
                 {"intervals.csv", "metrics.csv", "calibration.json"});
  return 0;
}

// ---- generate ----------------------------------------------------------------

struct GenerateArgs {
  GeneratorConfig cfg;
  std::size_t replications = 1;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  a.cfg.validate();
  if (a.replications == 0) throw Error(ErrorKind::InvalidConfig, "--replications must be at least 1");
  const std::string dir = resolve_out_dir(a.out);
  const auto reps = generate_replications(a.cfg, a.replications);
  write_text_atomic(out_path(dir, "data.csv"), dataset_to_csv(reps));
  json config{{"n", a.cfg.n},
              {"d", a.cfg.d},
              {"confounder_strength_t", a.cfg.confounder_strength_t},
              {"confounder_strength_y", a.cfg.confounder_strength_y},
              {"observed_strength", a.cfg.observed_strength},
              {"noise_sd", a.cfg.noise_sd},
              {"treatment_effect", a.cfg.treatment_effect},
              {"effect_heterogeneity", a.cfg.effect_heterogeneity},
              {"clip", a.cfg.clip},
              {"replications", a.replications}};
  write_manifest(dir, "generate", config, {{"seed", a.cfg.seed}}, json::array(), {"data.csv"});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hölder-bound sensitivity analysis for unobserved confounding"};
  app.require_subcommand(1);

  BoundArgs bound;
  auto* b = app.add_subcommand("bound", "Exact confounding bias and bounds for a discrete joint");
  b->add_option("--joint", bound.joint, "Joint distribution JSON")->required();
  b->add_option("--p", bound.p, "Hölder exponent for B_UT (number or 'inf'); q is its conjugate");
  b->add_flag("--grid", bound.grid, "Also report the tightest bound over the default exponent grid");
  b->add_option("--t", bound.t, "Treatment level (default: all)");
  b->add_option("--out", bound.out, "Also write bound.json and a manifest to this directory");

  SweepArgs sweep;
  auto* s = app.add_subcommand("sweep", "Synthetic Dirichlet sweep of exact biases and bounds");
  s->add_option("--n", sweep.cfg.n_samples, "Number of joints")->capture_default_str();
  s->add_option("--alpha", sweep.cfg.dirichlet_alpha, "Symmetric Dirichlet concentration")->capture_default_str();
  s->add_option("--dims", sweep.dims, "K_U,K_T,K_Y")->capture_default_str();
  s->add_option("--t", sweep.cfg.t_eval, "Treatment level to evaluate")->capture_default_str();
  s->add_option("--seed", sweep.cfg.base_seed, "Base seed")->capture_default_str();
  s->add_option("--workers", sweep.cfg.workers, "Worker threads (0 = hardware)");
  s->add_option("--out", sweep.out, "Output directory (default: $CONFBOUND_OUT_DIR or .)");

  auto add_data_options = [](CLI::App* cmd, DataArgs& a) {
    cmd->add_option("--data", a.data, "Dataset CSV")->required();
    cmd->add_option("--hide-col", a.hide_col, "0-based covariate index to hide");
    cmd->add_option("--alphas", a.alphas, "Alpha grid: comma list and/or start:stop:step");
    cmd->add_option("--seed", a.seed, "Run seed")->capture_default_str();
    cmd->add_option("--epochs", a.epochs, "Training epochs per model")->capture_default_str();
    cmd->add_option("--workers", a.workers, "Worker threads (0 = hardware)");
    cmd->add_option("--out", a.out, "Output directory (default: $CONFBOUND_OUT_DIR or .)");
  };

  DataArgs ate;
  auto* a = app.add_subcommand("ate", "Calibrated ATE intervals across replications");
  add_data_options(a, ate);

  CateArgs cate;
  auto* c = app.add_subcommand("cate", "Calibrated per-sample CATE intervals for one replication");
  add_data_options(c, cate.base);
  c->add_option("--rep", cate.rep, "Replication id (default: first in the file)");
  c->add_option("--max-hide-dims", cate.max_hide_dims, "Refit at most K hidden dimensions");
  c->add_option("--epsilon", cate.epsilon, "Neighborhood radius for the conditional TV (standardized units)");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic hidden-confounder dataset");
  g->add_option("--n", gen.cfg.n, "Rows per replication")->capture_default_str();
  g->add_option("--d", gen.cfg.d, "Observed covariates")->capture_default_str();
  g->add_option("--strength-t", gen.cfg.confounder_strength_t, "Hidden confounder effect on T")->capture_default_str();
  g->add_option("--strength-y", gen.cfg.confounder_strength_y, "Hidden confounder effect on Y")->capture_default_str();
  g->add_option("--observed-strength", gen.cfg.observed_strength, "Observed covariate effect on T")
      ->capture_default_str();
  g->add_option("--noise-sd", gen.cfg.noise_sd, "Outcome noise")->capture_default_str();
  g->add_option("--replications", gen.replications, "Number of replications")->capture_default_str();
  g->add_option("--seed", gen.cfg.seed, "Seed")->capture_default_str();
  g->add_option("--out", gen.out, "Output directory (default: $CONFBOUND_OUT_DIR or .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*b) return cmd_bound(bound);
    if (*s) return cmd_sweep(sweep);
    if (*a) return cmd_ate(ate);
    if (*c) return cmd_cate(cate);
    if (*g) return cmd_generate(gen);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const json::exception& e) {
    std::cerr << "error: SchemaError: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
