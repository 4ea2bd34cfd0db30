#include "report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace fairfl {

namespace fs = std::filesystem;

namespace {

// Named Rng streams for the data pipeline.
constexpr std::uint64_t kSynthStream = 101;
constexpr std::uint64_t kPartitionStream = 102;
constexpr std::uint64_t kSplitStream = 103;
constexpr std::uint64_t kTestPartitionStream = 104;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

SynthSpec synth_spec_from(const DatasetConfig& d) {
  return SynthSpec::axis_aligned(d.synth_d, d.synth_n, d.synth_p_s1,
                                 d.synth_p_y1_s0, d.synth_p_y1_s1,
                                 d.synth_label_shift, d.synth_attr_shift,
                                 d.synth_sigma);
}

std::vector<std::pair<std::size_t, std::size_t>> client_counts(
    const ExperimentConfig& cfg, std::size_t pool_size, std::uint64_t seed) {
  if (!cfg.partition_enabled) return {};
  if (cfg.partition.mode == PartitionSpec::Mode::fixed) {
    if (cfg.partition.fixed_counts.empty() &&
        cfg.partition.fixed_cell_counts.empty())
      fail_validation("partition: fixed mode requires counts");
    return cfg.partition.fixed_counts;
  }
  Rng rng(seed, kPartitionStream);
  (void)pool_size;
  return dirichlet_counts(cfg.partition, rng);
}

nlohmann::json record_json(const MetricsRecord& r) {
  return nlohmann::json{{"client_id", r.client_id}, {"acc", r.acc},
                        {"test_error", r.test_error}, {"ddp_sum", r.ddp_sum},
                        {"ddp_gap", r.ddp_gap},       {"npr0", r.npr0},
                        {"npr1", r.npr1},             {"bce", r.bce}};
}

void write_round_logs(const std::string& path,
                      const std::vector<RoundLog>& logs) {
  std::ofstream out(path);
  if (!out) fail_runtime("cannot write round log: " + path);
  for (const auto& log : logs) {
    nlohmann::json doc;
    doc["round"] = log.round;
    doc["global_norm"] = log.global_norm;
    auto& clients = doc["clients"] = nlohmann::json::array();
    for (const auto& c : log.clients)
      clients.push_back({{"client_id", c.client_id},
                         {"train_loss", c.train_loss},
                         {"fair_penalty", c.fair_penalty},
                         {"update_norm", c.update_norm}});
    out << doc.dump() << "\n";
  }
}

struct Cell {
  double eta;
  double lambda;
  std::uint64_t seed;
  std::size_t index;
};

}  // namespace

Federation build_federation(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto& d = cfg.dataset;
  std::vector<Sample> pool;
  std::vector<Sample> test_pool;
  bool have_test_pool = false;

  switch (d.source) {
    case DataSource::synth: {
      if (d.synth_n == 0)
        fail_validation("dataset: synth source requires synth_n > 0");
      Rng rng(seed, kSynthStream);
      pool = synth_gaussian(synth_spec_from(d), rng);
      break;
    }
    case DataSource::csv: {
      if (d.csv_train.empty())
        fail_validation("dataset: csv source requires csv_train");
      auto loaded = load_csv(d.csv_train, d.csv_schema);
      pool = std::move(loaded.samples);
      if (!d.csv_test.empty()) {
        test_pool = load_csv_with_stats(d.csv_test, d.csv_schema, loaded.stats);
        have_test_pool = true;
      }
      break;
    }
    case DataSource::embeddings: {
      if (d.embeddings_path.empty())
        fail_validation("dataset: embeddings source requires embeddings_path");
      pool = load_embeddings(d.embeddings_path);
      break;
    }
  }

  const bool cell_mode = cfg.partition_enabled &&
                         cfg.partition.mode == PartitionSpec::Mode::fixed &&
                         !cfg.partition.fixed_cell_counts.empty();
  std::vector<ClientDataset> clients;
  if (!cfg.partition_enabled) {
    clients.push_back(ClientDataset{0, pool});
  } else if (cell_mode) {
    Rng rng(seed, kPartitionStream + 1);
    clients = partition_fixed_cells(pool, cfg.partition.fixed_cell_counts, rng);
  } else {
    const auto counts = client_counts(cfg, pool.size(), seed);
    Rng rng(seed, kPartitionStream + 1);
    clients = partition_fixed(pool, counts, rng);
  }

  Federation fed;
  if (have_test_pool) {
    fed.train = std::move(clients);
    if (!cfg.partition_enabled) {
      fed.test.push_back(ClientDataset{0, std::move(test_pool)});
    } else {
      // Mirror the train partition's per-client group proportions onto the
      // separate test pool.
      const double ratio = static_cast<double>(test_pool.size()) /
                           static_cast<double>(pool.size());
      auto scaled = [&](std::size_t c) {
        return std::max<std::size_t>(
            1,
            static_cast<std::size_t>(std::lround(ratio * static_cast<double>(c))));
      };
      Rng rng(seed, kTestPartitionStream);
      if (cell_mode) {
        std::vector<std::array<std::size_t, 4>> test_counts;
        for (const auto& c : cfg.partition.fixed_cell_counts)
          test_counts.push_back(
              {scaled(c[0]), scaled(c[1]), scaled(c[2]), scaled(c[3])});
        fed.test = partition_fixed_cells(test_pool, test_counts, rng);
      } else {
        std::vector<std::pair<std::size_t, std::size_t>> test_counts;
        const auto counts = client_counts(cfg, pool.size(), seed);
        for (const auto& [c0, c1] : counts)
          test_counts.emplace_back(scaled(c0), scaled(c1));
        fed.test = partition_fixed(test_pool, test_counts, rng);
      }
    }
  } else {
    Rng rng(seed, kSplitStream);
    auto split = split_train_test(clients, d.test_fraction, rng);
    fed.train = std::move(split.train);
    fed.test = std::move(split.test);
  }
  return fed;
}

SummaryRow summarize(const std::vector<MetricsRecord>& records) {
  if (records.empty()) fail_validation("summarize: no records");
  SummaryRow row;
  row.records = records;
  row.worst_acc = 1.0;
  row.worst_ddp = 0.0;
  for (const auto& r : records) {
    row.worst_acc = std::min(row.worst_acc, r.acc);
    row.worst_ddp = std::max(row.worst_ddp, r.ddp_sum);
    row.avg_acc += r.acc;
    row.avg_ddp += r.ddp_sum;
  }
  const double m = static_cast<double>(records.size());
  row.avg_acc /= m;
  row.avg_ddp /= m;
  row.worst_err = 1.0 - row.worst_acc;
  row.avg_err = 1.0 - row.avg_acc;
  return row;
}

void emit_tradeoff_csv(const std::vector<SummaryRow>& rows,
                       const std::string& path) {
  std::vector<SummaryRow> sorted = rows;
  std::sort(sorted.begin(), sorted.end(),
            [](const SummaryRow& a, const SummaryRow& b) {
              return std::tie(a.algorithm, a.eta, a.lambda, a.seed) <
                     std::tie(b.algorithm, b.eta, b.lambda, b.seed);
            });
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_runtime("cannot write CSV: " + path);
  out << "algorithm,eta,lambda,seed,worst_err,worst_ddp,avg_err,avg_ddp,"
         "clients_file\n";
  for (const auto& r : sorted)
    out << r.algorithm << ',' << fmt(r.eta) << ',' << fmt(r.lambda) << ','
        << r.seed << ',' << fmt(r.worst_err) << ',' << fmt(r.worst_ddp) << ','
        << fmt(r.avg_err) << ',' << fmt(r.avg_ddp) << ',' << r.clients_file
        << "\n";
  if (!out) fail_runtime("I/O error writing CSV: " + path);
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  std::vector<double> etas = cfg.sweep.etas;
  if (etas.empty()) etas = {cfg.train.fairness.eta};
  std::vector<double> lambdas = cfg.sweep.lambdas;
  if (lambdas.empty()) lambdas = {cfg.train.lambda};
  std::vector<std::uint64_t> seeds = cfg.sweep.seeds;
  if (seeds.empty()) seeds = {cfg.train.seed};

  fs::create_directories(cfg.output.dir);

  std::vector<Cell> cells;
  for (double eta : etas)
    for (double lambda : lambdas)
      for (std::uint64_t seed : seeds)
        cells.push_back(Cell{eta, lambda, seed, cells.size()});

  std::vector<SummaryRow> rows(cells.size());
  std::vector<std::string> ok(cells.size());
  std::vector<std::string> errors(cells.size());

  auto run_cell = [&](const Cell& cell) {
    try {
      FairFLConfig train_cfg = cfg.train;
      train_cfg.fairness.eta = cell.eta;
      train_cfg.lambda = cell.lambda;
      train_cfg.seed = cell.seed;

      const Federation fed = build_federation(cfg, cell.seed);
      const TrainResult result = train(fed.train, train_cfg);
      const auto records = evaluate(result.state, fed.test, train_cfg);

      char stem[32];
      std::snprintf(stem, sizeof stem, "cell_%03zu", cell.index);
      const std::string metrics_rel = std::string(stem) + "_metrics.json";
      {
        nlohmann::json doc = nlohmann::json::array();
        for (const auto& r : records) doc.push_back(record_json(r));
        std::ofstream out(fs::path(cfg.output.dir) / metrics_rel);
        out << doc.dump(2) << "\n";
      }
      if (cfg.output.round_logs)
        write_round_logs(
            (fs::path(cfg.output.dir) / (std::string(stem) + "_rounds.jsonl"))
                .string(),
            result.logs);
      if (cfg.output.checkpoint)
        save_checkpoint(
            (fs::path(cfg.output.dir) / (std::string(stem) + "_model.bin"))
                .string(),
            result.state.global, result.state.personalized);

      SummaryRow row = summarize(records);
      row.algorithm = algorithm_to_string(train_cfg.algorithm);
      row.eta = cell.eta;
      row.lambda = cell.lambda;
      row.seed = cell.seed;
      row.clients_file = metrics_rel;
      rows[cell.index] = std::move(row);
      ok[cell.index] = "ok";
    } catch (const std::exception& e) {
      errors[cell.index] = e.what();
      ok[cell.index] = "error";
    }
  };

  std::size_t workers = 1;
  if (cfg.sweep.parallel) {
    workers = std::max(1u, std::thread::hardware_concurrency());
    if (const char* cap = std::getenv("FAIRFL_THREADS")) {
      const unsigned long v = std::strtoul(cap, nullptr, 10);
      if (v >= 1) workers = std::min<std::size_t>(workers, v);
    }
  }
  if (workers <= 1 || cells.size() <= 1) {
    for (const auto& cell : cells) run_cell(cell);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, cells.size()); ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cells.size()) return;
          run_cell(cells[i]);
        }
      });
    for (auto& t : pool) t.join();
  }

  RunResult result;
  nlohmann::json manifest;
  manifest["config_hash"] = config_hash_hex(cfg.source_text);
  manifest["algorithm"] = algorithm_to_string(cfg.train.algorithm);
  manifest["etas"] = etas;
  manifest["lambdas"] = lambdas;
  manifest["seeds"] = seeds;
  auto& cell_status = manifest["cells"] = nlohmann::json::array();
  for (const auto& cell : cells) {
    nlohmann::json entry{{"index", cell.index}, {"eta", cell.eta},
                         {"lambda", cell.lambda}, {"seed", cell.seed},
                         {"status", ok[cell.index]}};
    if (!errors[cell.index].empty()) {
      entry["error"] = errors[cell.index];
      result.cell_errors.push_back(errors[cell.index]);
    } else {
      result.rows.push_back(rows[cell.index]);
    }
    cell_status.push_back(std::move(entry));
  }
  {
    std::ofstream out(fs::path(cfg.output.dir) / "manifest.json");
    out << manifest.dump(2) << "\n";
  }
  emit_tradeoff_csv(result.rows,
                    (fs::path(cfg.output.dir) / "tradeoff.csv").string());
  return result;
}

void gen_synth_to_file(const ExperimentConfig& cfg, const std::string& path) {
  if (cfg.dataset.source != DataSource::synth)
    fail_validation("gen-synth requires dataset.source = synth");
  if (cfg.dataset.synth_n == 0)
    fail_validation("gen-synth requires synth_n > 0");
  Rng rng(cfg.train.seed, kSynthStream);
  const auto samples = synth_gaussian(synth_spec_from(cfg.dataset), rng);
  save_embeddings(path, samples);
}

void partition_to_dir(const ExperimentConfig& cfg, const std::string& dir) {
  if (!cfg.partition_enabled)
    fail_validation("partition subcommand requires partition.mode != none");
  const Federation fed = build_federation(cfg, cfg.train.seed);
  fs::create_directories(dir);
  for (std::size_t i = 0; i < fed.train.size(); ++i) {
    char name[48];
    std::snprintf(name, sizeof name, "client_%03zu_train.bin",
                  static_cast<std::size_t>(fed.train[i].client_id));
    save_embeddings((fs::path(dir) / name).string(), fed.train[i].samples);
    std::snprintf(name, sizeof name, "client_%03zu_test.bin",
                  static_cast<std::size_t>(fed.test[i].client_id));
    save_embeddings((fs::path(dir) / name).string(), fed.test[i].samples);
  }
}

std::string evaluate_checkpoint_json(const ExperimentConfig& cfg,
                                     const std::string& checkpoint_path) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const Federation fed = build_federation(cfg, cfg.train.seed);
  if (!ckpt.personalized.empty() &&
      ckpt.personalized.size() != fed.test.size())
    fail_validation("checkpoint holds " +
                    std::to_string(ckpt.personalized.size()) +
                    " personalized models but the config yields " +
                    std::to_string(fed.test.size()) + " clients");
  FederationState state;
  state.global = ckpt.global;
  state.personalized = ckpt.personalized.empty()
                           ? std::vector<ModelParams>(fed.test.size(),
                                                      ckpt.global)
                           : ckpt.personalized;
  const auto records = evaluate(state, fed.test, cfg.train);
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& r : records) doc.push_back(record_json(r));
  return doc.dump(2);
}

}  // namespace fairfl
