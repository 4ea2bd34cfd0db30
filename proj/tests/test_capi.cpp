// Exercises the shared-library surface exactly as an external client would:
// only fairfl/fairfl.h, no internal headers.
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "fairfl/fairfl.h"

namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "fairfl_capi_test";
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

const char* kConfig =
    "[dataset]\n"
    "source = synth\n"
    "synth_n = 600\n"
    "synth_d = 2\n"
    "synth_p_y1_s0 = 0.7\n"
    "synth_p_y1_s1 = 0.3\n"
    "[partition]\n"
    "mode = fixed\n"
    "counts = 120:30, 30:120\n"
    "[train]\n"
    "algorithm = pfedfair\n"
    "rounds = 3\n"
    "inner_steps = 3\n"
    "eta = 0.5\n"
    "seed = 1\n";

struct Buf {
  char err[1024] = {};
};

}  // namespace

TEST_CASE("version string") {
  CHECK(fairfl_version() != nullptr);
  CHECK(std::strlen(fairfl_version()) > 0);
}

TEST_CASE("config parse, set, and error reporting") {
  Buf b;
  fairfl_config* cfg = nullptr;
  CHECK(fairfl_config_parse(kConfig, &cfg, b.err, sizeof b.err) == FAIRFL_OK);
  REQUIRE(cfg != nullptr);

  CHECK(fairfl_config_set(cfg, "train.eta", "0.9", b.err, sizeof b.err) ==
        FAIRFL_OK);
  CHECK(fairfl_config_set(cfg, "train.nonsense", "1", b.err, sizeof b.err) ==
        FAIRFL_ERR_VALIDATION);
  CHECK(std::string(b.err).find("train.nonsense") != std::string::npos);
  fairfl_config_free(cfg);

  cfg = nullptr;
  CHECK(fairfl_config_parse("[bogus]\nk = v\n", &cfg, b.err, sizeof b.err) ==
        FAIRFL_ERR_VALIDATION);
  CHECK(cfg == nullptr);
  CHECK(fairfl_config_load("/no/such/file.cfg", &cfg, b.err, sizeof b.err) ==
        FAIRFL_ERR_VALIDATION);
}

TEST_CASE("gen-synth, train, evaluate, sweep through the C surface") {
  Buf b;
  fairfl_config* cfg = nullptr;
  REQUIRE(fairfl_config_parse(kConfig, &cfg, b.err, sizeof b.err) == FAIRFL_OK);

  const auto out = temp_dir() / "train_run";
  fs::remove_all(out);
  REQUIRE(fairfl_config_set(cfg, "output.dir", out.string().c_str(), b.err,
                            sizeof b.err) == FAIRFL_OK);

  const auto synth = (temp_dir() / "synth.bin").string();
  CHECK(fairfl_gen_synth(cfg, synth.c_str(), b.err, sizeof b.err) == FAIRFL_OK);
  CHECK(fs::exists(synth));

  const auto shards = (temp_dir() / "shards").string();
  CHECK(fairfl_partition(cfg, shards.c_str(), b.err, sizeof b.err) ==
        FAIRFL_OK);
  CHECK(fs::exists(fs::path(shards) / "client_000_train.bin"));

  CHECK(fairfl_train(cfg, b.err, sizeof b.err) == FAIRFL_OK);
  const auto ckpt = out / "cell_000_model.bin";
  REQUIRE(fs::exists(ckpt));

  char* report = nullptr;
  CHECK(fairfl_evaluate(cfg, ckpt.string().c_str(), &report, b.err,
                        sizeof b.err) == FAIRFL_OK);
  REQUIRE(report != nullptr);
  CHECK(std::string(report).find("ddp_sum") != std::string::npos);
  fairfl_string_free(report);

  CHECK(fairfl_sweep(cfg, b.err, sizeof b.err) == FAIRFL_OK);
  CHECK(fs::exists(out / "tradeoff.csv"));

  fairfl_config_free(cfg);
}

TEST_CASE("oracle solve through the C surface") {
  Buf b;
  const auto inst = temp_dir() / "inst.json";
  std::ofstream(inst) << "{\"x_size\": 2, \"p\": "
                         "[0.24, 0.0, 0.14, 0.0, 0.0, 0.56, 0.0, 0.06]}";
  char* report = nullptr;
  CHECK(fairfl_oracle_solve(inst.string().c_str(), 0.0, 101, &report, b.err,
                            sizeof b.err) == FAIRFL_OK);
  REQUIRE(report != nullptr);
  const std::string text(report);
  CHECK(text.find("\"risk\"") != std::string::npos);
  CHECK(text.find("closed_form_matches\": true") != std::string::npos);
  fairfl_string_free(report);

  report = nullptr;
  CHECK(fairfl_oracle_solve("/no/such.json", 0.0, 101, &report, b.err,
                            sizeof b.err) == FAIRFL_ERR_VALIDATION);
  CHECK(report == nullptr);

  std::ofstream(inst) << "{\"x_size\": 2, \"p\": [1.0]}";
  CHECK(fairfl_oracle_solve(inst.string().c_str(), 0.0, 101, &report, b.err,
                            sizeof b.err) == FAIRFL_ERR_VALIDATION);
  CHECK(std::string(b.err).find("8") != std::string::npos);
}
