#include "fairfl/fairfl.h"

#include <algorithm>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "config.hpp"
#include "oracle.hpp"
#include "report.hpp"

using fairfl::Error;
using fairfl::ErrorKind;

struct fairfl_config {
  fairfl::ExperimentConfig cfg;
};

namespace {

void put_error(char* err, size_t err_len, const std::string& msg) {
  if (!err || err_len == 0) return;
  const size_t n = std::min(err_len - 1, msg.size());
  std::memcpy(err, msg.data(), n);
  err[n] = '\0';
}

template <class F>
int guarded(char* err, size_t err_len, F&& f) {
  try {
    f();
    return FAIRFL_OK;
  } catch (const Error& e) {
    put_error(err, err_len, e.what());
    return e.kind() == ErrorKind::validation ? FAIRFL_ERR_VALIDATION
                                             : FAIRFL_ERR_RUNTIME;
  } catch (const std::exception& e) {
    put_error(err, err_len, e.what());
    return FAIRFL_ERR_RUNTIME;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* fairfl_version(void) { return "0.1.0"; }

int fairfl_config_load(const char* path, fairfl_config** out, char* err,
                       size_t err_len) {
  *out = nullptr;
  return guarded(err, err_len, [&] {
    auto cfg = std::make_unique<fairfl_config>();
    cfg->cfg = fairfl::parse_config_file(path);
    *out = cfg.release();
  });
}

int fairfl_config_parse(const char* text, fairfl_config** out, char* err,
                        size_t err_len) {
  *out = nullptr;
  return guarded(err, err_len, [&] {
    auto cfg = std::make_unique<fairfl_config>();
    cfg->cfg = fairfl::parse_config_text(text);
    *out = cfg.release();
  });
}

void fairfl_config_free(fairfl_config* cfg) { delete cfg; }

int fairfl_config_set(fairfl_config* cfg, const char* key, const char* value,
                      char* err, size_t err_len) {
  return guarded(err, err_len,
                 [&] { fairfl::apply_override(cfg->cfg, key, value); });
}

int fairfl_gen_synth(const fairfl_config* cfg, const char* out_path, char* err,
                     size_t err_len) {
  return guarded(err, err_len,
                 [&] { fairfl::gen_synth_to_file(cfg->cfg, out_path); });
}

int fairfl_partition(const fairfl_config* cfg, const char* out_dir, char* err,
                     size_t err_len) {
  return guarded(err, err_len,
                 [&] { fairfl::partition_to_dir(cfg->cfg, out_dir); });
}

int fairfl_train(const fairfl_config* cfg, char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    fairfl::ExperimentConfig single = cfg->cfg;
    single.sweep.etas.clear();
    single.sweep.lambdas.clear();
    single.sweep.seeds.clear();
    single.output.checkpoint = true;
    const auto result = fairfl::run_experiment(single);
    if (!result.cell_errors.empty())
      throw Error(ErrorKind::runtime, result.cell_errors.front());
  });
}

int fairfl_sweep(const fairfl_config* cfg, char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    const auto result = fairfl::run_experiment(cfg->cfg);
    if (result.rows.empty() && !result.cell_errors.empty())
      throw Error(ErrorKind::runtime,
                  "all sweep cells failed; first error: " +
                      result.cell_errors.front());
  });
}

int fairfl_evaluate(const fairfl_config* cfg, const char* checkpoint_path,
                    char** report_json, char* err, size_t err_len) {
  *report_json = nullptr;
  return guarded(err, err_len, [&] {
    *report_json = dup_string(
        fairfl::evaluate_checkpoint_json(cfg->cfg, checkpoint_path));
  });
}

int fairfl_oracle_solve(const char* instance_path, double epsilon, int grid_n,
                        char** report_json, char* err, size_t err_len) {
  *report_json = nullptr;
  return guarded(err, err_len, [&] {
    const auto inst = fairfl::instance_from_json_file(instance_path);
    const auto opt = fairfl::fair_optimum_grid(inst, epsilon, grid_n);
    *report_json = dup_string(fairfl::fair_optimum_report_json(inst, opt));
  });
}

void fairfl_string_free(char* s) { delete[] s; }

}  // extern "C"
