#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "numerics.hpp"

namespace fairfl {

// One labeled observation: standardized features, binary sensitive
// attribute, binary label.
struct Sample {
  Vec64 x;
  int s = 0;
  int y = 0;
};

struct ClientDataset {
  int client_id = 0;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  std::size_t dim() const { return samples.empty() ? 0 : samples[0].x.size(); }
  bool has_both_groups() const;
};

struct CsvSchema {
  // Empty feature list means: every column except s_col and y_col.
  std::vector<std::string> feature_cols;
  std::string s_col = "s";
  std::string y_col = "y";
};

// Per-column standardization statistics computed on the training split and
// reused on the test split.
struct StandardizeStats {
  Vec64 mean;
  Vec64 stdev;  // floored at sqrt(1e-12); constant columns map to zero
};

struct CsvLoadResult {
  std::vector<Sample> samples;
  StandardizeStats stats;
};

CsvLoadResult load_csv(const std::string& path, const CsvSchema& schema);
std::vector<Sample> load_csv_with_stats(const std::string& path,
                                        const CsvSchema& schema,
                                        const StandardizeStats& stats);

// Self-describing binary matrix format: magic "FFLE", u32 n, u32 d
// (little-endian), n*d float32 row-major, n bytes of s, n bytes of y.
std::vector<Sample> load_embeddings(const std::string& path);
void save_embeddings(const std::string& path,
                     const std::vector<Sample>& samples);

struct SynthSpec {
  std::size_t d = 2;
  std::size_t n = 0;
  double p_s1 = 0.5;
  double p_y1_given_s0 = 0.5;
  double p_y1_given_s1 = 0.5;
  double sigma = 1.0;
  // mean[y][s] is the Gaussian mean for group (y, s); each of length d.
  Vec64 mean[2][2];

  void validate() const;
  static SynthSpec axis_aligned(std::size_t d, std::size_t n, double p_s1,
                                double p_y1_s0, double p_y1_s1,
                                double label_shift, double attr_shift,
                                double sigma);
};

std::vector<Sample> synth_gaussian(const SynthSpec& spec, Rng& rng);

struct PartitionSpec {
  enum class Mode { fixed, dirichlet } mode = Mode::fixed;
  // fixed: per-client (count of s=0, count of s=1)
  std::vector<std::pair<std::size_t, std::size_t>> fixed_counts;
  // alternative fixed form: per-client counts of the four (s,y) cells in
  // the order s0y0:s0y1:s1y0:s1y1, which also pins each client's P(y|s)
  std::vector<std::array<std::size_t, 4>> fixed_cell_counts;
  // dirichlet
  std::size_t num_clients = 0;
  double fraction_under = 0.2;
  double alpha_under = 0.5;
  double alpha_over = 1.0;
  std::size_t samples_per_client = 0;
};

std::vector<ClientDataset> partition_fixed(
    const std::vector<Sample>& pool,
    const std::vector<std::pair<std::size_t, std::size_t>>& counts, Rng& rng);

std::vector<ClientDataset> partition_fixed_cells(
    const std::vector<Sample>& pool,
    const std::vector<std::array<std::size_t, 4>>& counts, Rng& rng);

// Per-client (s=0, s=1) counts drawn from the two-component Dirichlet
// mixture; partition_dirichlet feeds these to partition_fixed.
std::vector<std::pair<std::size_t, std::size_t>> dirichlet_counts(
    const PartitionSpec& spec, Rng& rng);

std::vector<ClientDataset> partition_dirichlet(const std::vector<Sample>& pool,
                                               const PartitionSpec& spec,
                                               Rng& rng);

// Splits each client shard into train/test, stratified by the sensitive
// attribute so test shards mirror the train s-proportions.
struct TrainTestSplit {
  std::vector<ClientDataset> train;
  std::vector<ClientDataset> test;
};
TrainTestSplit split_train_test(const std::vector<ClientDataset>& clients,
                                double test_fraction, Rng& rng);

}  // namespace fairfl
