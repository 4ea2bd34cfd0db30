// fairfl command-line front end. Talks to the core exclusively through the
// C API in fairfl/fairfl.h.

#include <cstdio>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "fairfl/fairfl.h"

namespace {

constexpr size_t kErrLen = 1024;

struct ConfigDeleter {
  void operator()(fairfl_config* c) const { fairfl_config_free(c); }
};
using ConfigPtr = std::unique_ptr<fairfl_config, ConfigDeleter>;

struct CommonOpts {
  std::string config_path;
  std::string out;
  std::string algorithm;
  double eta = -1.0;
  double lambda = -1.0;
  long long rounds = -1;
  long long seed = -1;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool need_config = true) {
  auto* c = cmd->add_option("--config", opts.config_path,
                            "experiment config file");
  if (need_config) c->required();
  cmd->add_option("--out", opts.out, "output directory/path override");
  cmd->add_option("--algorithm", opts.algorithm,
                  "override train.algorithm (local|fedavg|pfedme|pfedfair)");
  cmd->add_option("--eta", opts.eta, "override train.eta");
  cmd->add_option("--lambda", opts.lambda, "override train.lambda");
  cmd->add_option("--rounds", opts.rounds, "override train.rounds");
  cmd->add_option("--seed", opts.seed, "override train.seed");
  cmd->add_option("--set", opts.overrides,
                  "extra section.key=value overrides (repeatable)");
}

int fail(int code, const char* err) {
  std::fprintf(stderr, "error: %s\n", err);
  return code;
}

int load_config(const CommonOpts& opts, ConfigPtr& cfg, bool out_is_dir) {
  char err[kErrLen];
  fairfl_config* raw = nullptr;
  int rc = fairfl_config_load(opts.config_path.c_str(), &raw, err, kErrLen);
  if (rc != FAIRFL_OK) return fail(rc, err);
  cfg.reset(raw);

  auto set = [&](const std::string& key, const std::string& value) -> int {
    int rc2 = fairfl_config_set(cfg.get(), key.c_str(), value.c_str(), err,
                                kErrLen);
    return rc2 == FAIRFL_OK ? 0 : fail(rc2, err);
  };
  if (!opts.algorithm.empty())
    if (int rc2 = set("train.algorithm", opts.algorithm)) return rc2;
  if (opts.eta >= 0.0)
    if (int rc2 = set("train.eta", std::to_string(opts.eta))) return rc2;
  if (opts.lambda >= 0.0)
    if (int rc2 = set("train.lambda", std::to_string(opts.lambda))) return rc2;
  if (opts.rounds >= 0)
    if (int rc2 = set("train.rounds", std::to_string(opts.rounds))) return rc2;
  if (opts.seed >= 0)
    if (int rc2 = set("train.seed", std::to_string(opts.seed))) return rc2;
  if (out_is_dir && !opts.out.empty())
    if (int rc2 = set("output.dir", opts.out)) return rc2;
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      return fail(FAIRFL_ERR_VALIDATION,
                  ("--set expects section.key=value, got '" + kv + "'").c_str());
    if (int rc2 = set(kv.substr(0, eq), kv.substr(eq + 1))) return rc2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairfl: fairness-aware federated learning simulator"};
  app.require_subcommand(1);
  char err[kErrLen];

  CommonOpts gen_opts, part_opts, train_opts, eval_opts, sweep_opts;
  std::string eval_checkpoint;

  auto* gen = app.add_subcommand("gen-synth",
                                 "generate a synthetic dataset file");
  add_common(gen, gen_opts);

  auto* part = app.add_subcommand("partition",
                                  "write per-client train/test shards");
  add_common(part, part_opts);

  auto* tr = app.add_subcommand("train", "run one training cell");
  add_common(tr, train_opts);

  auto* ev = app.add_subcommand("evaluate",
                                "evaluate a checkpoint on the test shards");
  add_common(ev, eval_opts);
  ev->add_option("--checkpoint", eval_checkpoint, "model checkpoint file")
      ->required();

  auto* sw = app.add_subcommand("sweep", "run the configured sweep");
  add_common(sw, sweep_opts);

  auto* oracle = app.add_subcommand(
      "oracle", "solve the discrete fairness-constrained oracle problem");
  std::string instance_path;
  double epsilon = 0.0;
  int grid_n = 101;
  oracle->add_option("--instance", instance_path, "instance JSON file")
      ->required();
  oracle->add_option("--epsilon", epsilon, "disparity budget (>= 0)");
  oracle->add_option("--grid-n", grid_n, "rate grid resolution");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : FAIRFL_ERR_VALIDATION;
  }

  if (gen->parsed()) {
    if (gen_opts.out.empty())
      return fail(FAIRFL_ERR_VALIDATION, "gen-synth requires --out <file>");
    ConfigPtr cfg;
    if (int rc = load_config(gen_opts, cfg, false)) return rc;
    int rc = fairfl_gen_synth(cfg.get(), gen_opts.out.c_str(), err, kErrLen);
    if (rc != FAIRFL_OK) return fail(rc, err);
    std::printf("wrote %s\n", gen_opts.out.c_str());
    return 0;
  }
  if (part->parsed()) {
    if (part_opts.out.empty())
      return fail(FAIRFL_ERR_VALIDATION, "partition requires --out <dir>");
    ConfigPtr cfg;
    if (int rc = load_config(part_opts, cfg, false)) return rc;
    int rc = fairfl_partition(cfg.get(), part_opts.out.c_str(), err, kErrLen);
    if (rc != FAIRFL_OK) return fail(rc, err);
    std::printf("wrote client shards under %s\n", part_opts.out.c_str());
    return 0;
  }
  if (tr->parsed()) {
    ConfigPtr cfg;
    if (int rc = load_config(train_opts, cfg, true)) return rc;
    int rc = fairfl_train(cfg.get(), err, kErrLen);
    if (rc != FAIRFL_OK) return fail(rc, err);
    std::printf("training complete\n");
    return 0;
  }
  if (ev->parsed()) {
    ConfigPtr cfg;
    if (int rc = load_config(eval_opts, cfg, false)) return rc;
    char* report = nullptr;
    int rc = fairfl_evaluate(cfg.get(), eval_checkpoint.c_str(), &report, err,
                             kErrLen);
    if (rc != FAIRFL_OK) return fail(rc, err);
    std::printf("%s\n", report);
    fairfl_string_free(report);
    return 0;
  }
  if (sw->parsed()) {
    ConfigPtr cfg;
    if (int rc = load_config(sweep_opts, cfg, true)) return rc;
    int rc = fairfl_sweep(cfg.get(), err, kErrLen);
    if (rc != FAIRFL_OK) return fail(rc, err);
    std::printf("sweep complete\n");
    return 0;
  }
  if (oracle->parsed()) {
    char* report = nullptr;
    int rc = fairfl_oracle_solve(instance_path.c_str(), epsilon, grid_n,
                                 &report, err, kErrLen);
    if (rc != FAIRFL_OK) return fail(rc, err);
    std::printf("%s\n", report);
    fairfl_string_free(report);
    return 0;
  }
  return FAIRFL_ERR_VALIDATION;
}
