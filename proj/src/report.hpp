#pragma once

#include <string>
#include <vector>

#include "config.hpp"

namespace fairfl {

struct Federation {
  std::vector<ClientDataset> train;
  std::vector<ClientDataset> test;
};

// Deterministic data pipeline for one experiment cell: source -> partition
// -> train/test shards. All randomness comes from named streams of `seed`.
Federation build_federation(const ExperimentConfig& cfg, std::uint64_t seed);

struct SummaryRow {
  std::string algorithm;
  double eta = 0.0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  double worst_acc = 0.0, worst_err = 0.0, worst_ddp = 0.0;
  double avg_acc = 0.0, avg_err = 0.0, avg_ddp = 0.0;
  std::vector<MetricsRecord> records;
  std::string clients_file;  // per-client metrics blob, relative path
};

SummaryRow summarize(const std::vector<MetricsRecord>& records);

void emit_tradeoff_csv(const std::vector<SummaryRow>& rows,
                       const std::string& path);

struct RunResult {
  std::vector<SummaryRow> rows;
  std::vector<std::string> cell_errors;  // failed cells; run continues
};

// Full sweep: one cell per (eta, lambda, seed); artifacts and a manifest are
// written under cfg.output.dir.
RunResult run_experiment(const ExperimentConfig& cfg);

// CLI surfaces.
void gen_synth_to_file(const ExperimentConfig& cfg, const std::string& path);
void partition_to_dir(const ExperimentConfig& cfg, const std::string& dir);
std::string evaluate_checkpoint_json(const ExperimentConfig& cfg,
                                     const std::string& checkpoint_path);

}  // namespace fairfl
