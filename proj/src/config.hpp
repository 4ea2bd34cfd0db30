#pragma once

#include <map>
#include <string>
#include <vector>

#include "data.hpp"
#include "fedengine.hpp"

namespace fairfl {

enum class DataSource { synth, csv, embeddings };

struct DatasetConfig {
  DataSource source = DataSource::synth;
  // csv
  std::string csv_train;
  std::string csv_test;  // optional; empty means split per client
  CsvSchema csv_schema;
  // embeddings
  std::string embeddings_path;
  // synth (axis-aligned Gaussian family)
  std::size_t synth_n = 0;
  std::size_t synth_d = 2;
  double synth_p_s1 = 0.5;
  double synth_p_y1_s0 = 0.5;
  double synth_p_y1_s1 = 0.5;
  double synth_label_shift = 1.5;
  double synth_attr_shift = 1.0;
  double synth_sigma = 1.0;

  double test_fraction = 0.25;
};

struct SweepConfig {
  std::vector<double> etas;
  std::vector<double> lambdas;
  std::vector<std::uint64_t> seeds;
  bool parallel = false;
};

struct OutputConfig {
  std::string dir = "out";
  bool round_logs = true;
  bool checkpoint = false;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  PartitionSpec partition;
  bool partition_enabled = true;
  FairFLConfig train;
  SweepConfig sweep;
  OutputConfig output;
  std::string source_text;  // raw config document, hashed into the manifest
};

// Flat sectioned key=value document; '#' starts a comment; unknown sections
// or keys are rejected.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Applies a "section.key=value" override (CLI flags funnel through this).
void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value);

// Canonical re-serialization: emits every setting in a fixed section and
// key order. parse_config_text(serialize_config(cfg)) yields an equivalent
// config, and serializing that again reproduces the same document.
std::string serialize_config(const ExperimentConfig& cfg);

std::string config_hash_hex(const std::string& text);

}  // namespace fairfl
