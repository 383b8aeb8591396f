// Copyright 2026 The SGFR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// sgfr command-line tool. Every subcommand goes through the C API.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sgfr/sgfr.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Carries a status out of a subcommand so main() can map it to an exit code.
struct Failure {
  sgfr_status status;
  std::string message;
};

void check(sgfr_status status, const std::string& context) {
  if (status != SGFR_OK) {
    throw Failure{status, context + ": " + sgfr_status_string(status) + ": " + sgfr_last_error()};
  }
}

void usage_error(const std::string& message) { throw Failure{SGFR_ERR_INVALID_ARGUMENT, message}; }

std::string take(char* s) {
  std::string out = s ? s : "";
  sgfr_string_free(s);
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Failure{SGFR_ERR_IO, "cannot write " + path.string()};
  out << text;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
  return out;
}

struct Options {
  std::string bank_dir;
  std::string features_dir;
  std::string out;
  std::string masks_dir;
  std::string scores_dir;
  std::vector<uint32_t> levels{2, 3};
  uint32_t l_ref = 4;
  uint32_t s_ref = 40;
  uint32_t sparsity = 17;
  double epsilon = 1e-6;
  double sigma = 4.0;
  std::string aggregation = "mean";
  std::string correlation = "abs";
  bool normalize = true;
  std::string sampling = "subspace";
  std::vector<uint32_t> output_size{256, 256};
  uint64_t seed = 0;
  uint32_t threads = std::max(1u, std::thread::hardware_concurrency());
  bool pgm = false;
  double max_fpr = 0.3;
  std::vector<uint32_t> s_ref_grid;
  std::vector<std::string> methods{"subspace", "random"};
  bool tie_sparsity = true;
  std::vector<uint32_t> bank_sizes{50, 100, 200};
  std::vector<uint32_t> base_shape{32, 32, 16};
  uint32_t queries = 3;
  sgfr_synth_spec synth{};
  std::vector<uint32_t> block{4, 4};
};

sgfr_sampling parse_sampling(const std::string& name) {
  if (name == "subspace") return SGFR_SAMPLING_SUBSPACE;
  if (name == "random") return SGFR_SAMPLING_RANDOM;
  if (name == "nearest") return SGFR_SAMPLING_NEAREST;
  if (name == "full" || name == "none") return SGFR_SAMPLING_FULL;
  usage_error("unknown sampling method '" + name + "'");
  return SGFR_SAMPLING_FULL;
}

sgfr_pipeline_config pipeline_config(const Options& o) {
  sgfr_pipeline_config c;
  sgfr_pipeline_config_default(&c);
  if (o.levels.empty() || o.levels.size() > SGFR_MAX_LEVELS) usage_error("--levels needs 1 to 8 levels");
  std::copy(o.levels.begin(), o.levels.end(), c.scoring_levels);
  c.n_scoring_levels = o.levels.size();
  c.l_ref = o.l_ref;
  c.s_ref = o.s_ref;
  c.sparsity = o.sparsity;
  c.epsilon = o.epsilon;
  c.sigma = o.sigma;
  c.output_height = o.output_size.at(0);
  c.output_width = o.output_size.at(1);
  c.aggregation = o.aggregation == "sum" ? SGFR_AGG_SUM : SGFR_AGG_MEAN;
  c.correlation = o.correlation == "signed" ? SGFR_CORR_SIGNED : SGFR_CORR_ABSOLUTE;
  c.normalize_columns = o.normalize ? 1 : 0;
  c.sampling = parse_sampling(o.sampling);
  c.seed = o.seed;
  c.threads = 1;
  check(sgfr_pipeline_config_validate(&c), "invalid configuration");
  return c;
}

json config_json(const sgfr_pipeline_config& c) {
  char* s = nullptr;
  check(sgfr_pipeline_config_json(&c, &s), "config");
  return json::parse(take(s));
}

// Leading comment line of every CSV artifact.
std::string csv_preamble(const json& config) {
  return "# sgfr " + std::string(sgfr_version()) + " config=" + config.dump() + "\n";
}

struct BankHandle {
  sgfr_bank* ptr = nullptr;
  ~BankHandle() { sgfr_bank_free(ptr); }
};

void load_bank(const Options& o, BankHandle& bank) {
  if (o.bank_dir.empty()) usage_error("--bank is required");
  check(sgfr_bank_load(o.bank_dir.c_str(), &bank.ptr), "loading bank " + o.bank_dir);
}

void cmd_bank(const Options& o) {
  if (o.features_dir.empty() || o.out.empty()) usage_error("bank needs --features and --out");
  std::vector<uint32_t> levels = o.levels;
  if (std::find(levels.begin(), levels.end(), o.l_ref) == levels.end()) levels.push_back(o.l_ref);
  BankHandle bank;
  check(sgfr_bank_build(o.features_dir.c_str(), levels.data(), levels.size(), o.l_ref, &bank.ptr),
        "building bank");
  check(sgfr_bank_save(bank.ptr, o.out.c_str()), "saving bank");
  char* manifest = nullptr;
  check(sgfr_bank_manifest_json(bank.ptr, &manifest), "manifest");
  json summary = json::parse(take(manifest));
  std::cout << json{{"bank", o.out}, {"N", summary["N"]}, {"l_ref", summary["l_ref"]},
                    {"version", sgfr_version()}}
                   .dump(2)
            << "\n";
}

void cmd_score(const Options& o) {
  if (o.features_dir.empty() || o.out.empty()) usage_error("score needs --features and --out");
  const sgfr_pipeline_config config = pipeline_config(o);
  BankHandle bank;
  load_bank(o, bank);
  const json echo = config_json(config);
  const json extra = {{"config", echo}, {"version", sgfr_version()}, {"bank", o.bank_dir}};
  char* summary = nullptr;
  check(sgfr_score_directory(bank.ptr, o.features_dir.c_str(), o.out.c_str(), &config, o.threads,
                             o.pgm ? 1 : 0, extra.dump().c_str(), &summary),
        "scoring");
  json run = json::parse(take(summary));
  run.update(extra);
  run["threads"] = o.threads;
  write_file(fs::path(o.out) / "run.json", run.dump(2) + "\n");
  std::cout << "scored " << run["samples"].size() << " samples into " << o.out << "\n";
}

void cmd_synth(Options o) {
  if (o.out.empty()) usage_error("synth needs --out");
  if (o.block.size() != 2) usage_error("--block needs H,W");
  o.synth.block_height = o.block[0];
  o.synth.block_width = o.block[1];
  o.synth.seed = o.seed;
  check(sgfr_synth_generate(&o.synth, o.out.c_str()), "generating synthetic data");
  std::cout << "wrote synthetic dataset to " << o.out << "\n";
}

void cmd_eval(const Options& o) {
  if (o.masks_dir.empty()) usage_error("eval needs --masks");
  if (o.s_ref_grid.empty()) {
    if (o.scores_dir.empty()) usage_error("eval needs --scores, or --bank/--features/--sref-grid");
    char* report = nullptr;
    check(sgfr_eval_directory(o.scores_dir.c_str(), o.masks_dir.c_str(), o.max_fpr, &report),
          "evaluating");
    json out = json::parse(take(report));
    out["version"] = sgfr_version();
    out["scores"] = o.scores_dir;
    const fs::path run = fs::path(o.scores_dir) / "run.json";
    if (fs::exists(run)) {
      std::ifstream in(run);
      out["config"] = json::parse(in).value("config", json::object());
    }
    if (!o.out.empty()) write_file(o.out, out.dump(2) + "\n");
    std::printf("auroc %.6f pro %.6f (max_fpr %.2f, %zu samples)\n", out["auroc"].get<double>(),
                out["pro"].get<double>(), o.max_fpr, out["n_samples"].get<std::size_t>());
    return;
  }

  // Sampling ablation mode.
  if (o.features_dir.empty()) usage_error("ablation needs --features");
  const sgfr_pipeline_config config = pipeline_config(o);
  BankHandle bank;
  load_bank(o, bank);
  std::vector<sgfr_sampling> methods;
  for (const auto& m : o.methods) methods.push_back(parse_sampling(m));
  char* result = nullptr;
  check(sgfr_ablate(bank.ptr, o.features_dir.c_str(), o.masks_dir.c_str(), &config,
                    o.s_ref_grid.data(), o.s_ref_grid.size(), methods.data(), methods.size(),
                    o.tie_sparsity ? 1 : 0, o.threads, &result),
        "ablation");
  json out = json::parse(take(result));
  json echo = config_json(config);
  echo["s_ref_grid"] = o.s_ref_grid;
  echo["methods"] = o.methods;
  echo["tie_sparsity"] = o.tie_sparsity;
  const std::string csv = csv_preamble(echo) + out["csv"].get<std::string>();
  if (o.out.empty()) {
    std::cout << csv;
  } else {
    write_file(o.out, csv);
    fs::path report = o.out;
    report.replace_extension(".json");
    write_file(report, json{{"rows", out["rows"]}, {"config", echo}, {"version", sgfr_version()}}
                               .dump(2) + "\n");
  }
}

void cmd_bench(const Options& o) {
  if (o.base_shape.size() != 3) usage_error("--shape needs H,W,C");
  sgfr_bench_spec spec{};
  spec.bank_sizes = o.bank_sizes.data();
  spec.n_bank_sizes = o.bank_sizes.size();
  const std::vector<uint32_t> grid = o.s_ref_grid.empty() ? std::vector<uint32_t>{20} : o.s_ref_grid;
  spec.s_ref_grid = grid.data();
  spec.n_s_ref = grid.size();
  std::copy(o.base_shape.begin(), o.base_shape.end(), spec.base_shape);
  spec.sparsity = o.sparsity;
  spec.queries = o.queries;
  spec.seed = o.seed;
  char* result = nullptr;
  check(sgfr_bench(&spec, &result), "bench");
  json out = json::parse(take(result));
  const std::string csv = csv_preamble(out["spec"]) + out["csv"].get<std::string>();
  if (o.out.empty()) {
    std::cout << csv;
  } else {
    write_file(o.out, csv);
  }
}

void add_pipeline_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--levels", o.levels, "scoring levels")->delimiter(',')->capture_default_str();
  cmd->add_option("--lref", o.l_ref, "reference level for sampling")->capture_default_str();
  cmd->add_option("--sref", o.s_ref, "sampled subset size")->capture_default_str();
  cmd->add_option("--s", o.sparsity, "OMP sparsity")->capture_default_str();
  cmd->add_option("--eps", o.epsilon, "OMP residual tolerance")->capture_default_str();
  cmd->add_option("--sigma", o.sigma, "Gaussian smoothing width")->capture_default_str();
  cmd->add_option("--agg", o.aggregation, "level aggregation")
      ->check(CLI::IsMember({"mean", "sum"}))
      ->capture_default_str();
  cmd->add_option("--corr", o.correlation, "atom correlation")
      ->check(CLI::IsMember({"abs", "signed"}))
      ->capture_default_str();
  cmd->add_option("--normalize", o.normalize, "normalize dictionary columns")->capture_default_str();
  cmd->add_option("--sampling", o.sampling, "subspace, random, nearest or full")
      ->capture_default_str();
  cmd->add_option("--output-size", o.output_size, "score map H,W")
      ->delimiter(',')
      ->expected(2)
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  sgfr_synth_spec_default(&o.synth);

  CLI::App app{"Sparse self-expressive feature reconstruction for anomaly localization"};
  app.set_version_flag("--version", std::string(sgfr_version()));
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", o.seed, "random seed")->capture_default_str();

  auto* bank = app.add_subcommand("bank", "build a memory bank from nominal feature files");
  bank->add_option("--features", o.features_dir, "directory of <id>_l<level>.sgt")->required();
  bank->add_option("--out", o.out, "bank output directory")->required();
  bank->add_option("--levels", o.levels, "levels to store")->delimiter(',');
  bank->add_option("--lref", o.l_ref, "reference level")->capture_default_str();

  auto* score = app.add_subcommand("score", "score test samples against a bank");
  score->add_option("--bank", o.bank_dir, "bank directory")->required();
  score->add_option("--features", o.features_dir, "test feature directory")->required();
  score->add_option("--out", o.out, "output directory")->required();
  score->add_flag("--pgm", o.pgm, "also write 16-bit PGM previews");
  add_pipeline_flags(score, o);

  auto* synth = app.add_subcommand("synth", "generate a synthetic union-of-subspaces dataset");
  synth->add_option("--out", o.out, "output directory")->required();
  synth->add_option("--subspaces", o.synth.n_subspaces, "number of subspaces")
      ->capture_default_str();
  synth->add_option("--subspace-dim", o.synth.subspace_dim, "dimension of each subspace")
      ->capture_default_str();
  synth->add_option("--points", o.synth.points_per_subspace, "nominal points per subspace")
      ->capture_default_str();
  synth->add_option("--n-test", o.synth.n_test, "test samples")->capture_default_str();
  synth->add_option("--noise", o.synth.noise_sigma, "expected noise norm per feature")
      ->capture_default_str();
  synth->add_option("--magnitude", o.synth.anomaly_magnitude,
                    "perturbation norm per pixel, relative to nominal")
      ->capture_default_str();
  synth->add_option("--anomaly-fraction", o.synth.anomaly_fraction,
                    "share of test samples with a block")
      ->capture_default_str();
  synth->add_option("--block", o.block, "anomaly block H,W in finest-level cells")
      ->delimiter(',')
      ->capture_default_str();

  auto* eval = app.add_subcommand("eval", "pixel AUROC/PRO of score maps, or the sampling ablation");
  eval->add_option("--scores", o.scores_dir, "directory of <id>_map.sgt");
  eval->add_option("--masks", o.masks_dir, "directory of <id>_mask.sgt")->required();
  eval->add_option("--out", o.out, "report path (JSON, or CSV in ablation mode)");
  eval->add_option("--max-fpr", o.max_fpr, "PRO integration limit")->capture_default_str();
  eval->add_option("--bank", o.bank_dir, "bank directory (ablation)");
  eval->add_option("--features", o.features_dir, "test feature directory (ablation)");
  eval->add_option("--sref-grid", o.s_ref_grid, "ablation s_ref values")->delimiter(',');
  eval->add_option("--methods", o.methods, "ablation sampling methods")->delimiter(',');
  eval->add_option("--tie-sparsity", o.tie_sparsity, "use s = s_ref/2 in the ablation")
      ->capture_default_str();
  add_pipeline_flags(eval, o);

  auto* bench = app.add_subcommand("bench", "time scoring with and without subspace sampling");
  bench->add_option("--sizes", o.bank_sizes, "bank sizes N")->delimiter(',')->capture_default_str();
  bench->add_option("--sref-grid", o.s_ref_grid, "s_ref values (default 20)")->delimiter(',');
  bench->add_option("--shape", o.base_shape, "finest scoring level H,W,C")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--s", o.sparsity, "OMP sparsity")->capture_default_str();
  bench->add_option("--queries", o.queries, "timed queries per cell")->capture_default_str();
  bench->add_option("--out", o.out, "CSV path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*bank) cmd_bank(o);
    if (*score) cmd_score(o);
    if (*synth) cmd_synth(o);
    if (*eval) cmd_eval(o);
    if (*bench) cmd_bench(o);
  } catch (const Failure& f) {
    std::cerr << "sgfr: " << f.message << "\n";
    return sgfr_exit_code(f.status);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "sgfr: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "sgfr: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
