#include "data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fairfl {

namespace {

constexpr char kEmbedMagic[4] = {'F', 'F', 'L', 'E'};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

int parse_binary(const std::string& raw, const std::string& col,
                 std::size_t row) {
  if (raw == "0") return 0;
  if (raw == "1") return 1;
  fail_validation("column '" + col + "' must be binary, got '" + raw +
                  "' at row " + std::to_string(row));
}

double parse_real(const std::string& raw, const std::string& col,
                  std::size_t row) {
  try {
    std::size_t pos = 0;
    double v = std::stod(raw, &pos);
    if (pos != raw.size() || !std::isfinite(v)) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    fail_validation("malformed value '" + raw + "' in column '" + col +
                    "' at row " + std::to_string(row));
  }
}

struct CsvRaw {
  std::vector<std::string> feature_names;
  std::vector<Vec64> features;
  std::vector<int> s;
  std::vector<int> y;
};

CsvRaw read_csv_raw(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) fail_validation("cannot open CSV file: " + path);
  std::string line;
  if (!std::getline(in, line)) fail_validation("empty CSV file: " + path);
  const auto header = split_csv_line(line);

  auto col_index = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      fail_validation("CSV is missing column '" + name + "': " + path);
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t s_idx = col_index(schema.s_col);
  const std::size_t y_idx = col_index(schema.y_col);

  std::vector<std::size_t> feat_idx;
  CsvRaw raw;
  if (schema.feature_cols.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i != s_idx && i != y_idx) {
        feat_idx.push_back(i);
        raw.feature_names.push_back(header[i]);
      }
    }
  } else {
    for (const auto& name : schema.feature_cols) {
      feat_idx.push_back(col_index(name));
      raw.feature_names.push_back(name);
    }
  }
  if (feat_idx.empty()) fail_validation("CSV schema selects no feature columns");

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      fail_validation("malformed row " + std::to_string(row) + ": expected " +
                      std::to_string(header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    Vec64 x(feat_idx.size());
    for (std::size_t j = 0; j < feat_idx.size(); ++j)
      x[j] = parse_real(fields[feat_idx[j]], raw.feature_names[j], row);
    raw.features.push_back(std::move(x));
    raw.s.push_back(parse_binary(fields[s_idx], schema.s_col, row));
    raw.y.push_back(parse_binary(fields[y_idx], schema.y_col, row));
  }
  if (raw.features.empty()) fail_validation("CSV has no data rows: " + path);
  return raw;
}

std::vector<Sample> assemble(CsvRaw&& raw, const StandardizeStats& stats) {
  std::vector<Sample> samples(raw.features.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Vec64& x = raw.features[i];
    for (std::size_t j = 0; j < x.size(); ++j)
      x[j] = stats.stdev[j] > 0.0 ? (x[j] - stats.mean[j]) / stats.stdev[j]
                                  : 0.0;
    samples[i] = Sample{std::move(x), raw.s[i], raw.y[i]};
  }
  return samples;
}

template <class T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

bool ClientDataset::has_both_groups() const {
  bool g0 = false, g1 = false;
  for (const auto& smp : samples) (smp.s == 0 ? g0 : g1) = true;
  return g0 && g1;
}

CsvLoadResult load_csv(const std::string& path, const CsvSchema& schema) {
  CsvRaw raw = read_csv_raw(path, schema);
  const std::size_t d = raw.features[0].size();
  const double n = static_cast<double>(raw.features.size());

  StandardizeStats stats;
  stats.mean.assign(d, 0.0);
  stats.stdev.assign(d, 0.0);
  for (const auto& x : raw.features)
    for (std::size_t j = 0; j < d; ++j) stats.mean[j] += x[j];
  for (std::size_t j = 0; j < d; ++j) stats.mean[j] /= n;
  for (const auto& x : raw.features)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = x[j] - stats.mean[j];
      stats.stdev[j] += c * c;
    }
  for (std::size_t j = 0; j < d; ++j) {
    const double var = stats.stdev[j] / n;
    // Variance floor: constant columns standardize to all-zeros.
    stats.stdev[j] = var > 1e-12 ? std::sqrt(var) : 0.0;
  }
  return CsvLoadResult{assemble(std::move(raw), stats), std::move(stats)};
}

std::vector<Sample> load_csv_with_stats(const std::string& path,
                                        const CsvSchema& schema,
                                        const StandardizeStats& stats) {
  CsvRaw raw = read_csv_raw(path, schema);
  if (raw.features[0].size() != stats.mean.size())
    fail_validation("CSV feature count " +
                    std::to_string(raw.features[0].size()) +
                    " does not match standardization stats of dimension " +
                    std::to_string(stats.mean.size()));
  return assemble(std::move(raw), stats);
}

std::vector<Sample> load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_validation("cannot open embedding file: " + path);
  in.seekg(0, std::ios::end);
  const std::size_t file_size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);

  char magic[4];
  std::uint32_t n = 0, d = 0;
  if (file_size < 12) fail_validation("embedding file too short: " + path);
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(&d), 4);
  if (std::memcmp(magic, kEmbedMagic, 4) != 0)
    fail_validation("bad magic bytes in embedding file: " + path);

  const std::size_t expected =
      12 + static_cast<std::size_t>(n) * d * 4 + 2 * static_cast<std::size_t>(n);
  if (file_size != expected)
    fail_validation("embedding file length mismatch: expected " +
                    std::to_string(expected) + " bytes, found " +
                    std::to_string(file_size));

  std::vector<float> matrix(static_cast<std::size_t>(n) * d);
  in.read(reinterpret_cast<char*>(matrix.data()),
          static_cast<std::streamsize>(matrix.size() * 4));
  std::vector<std::uint8_t> s(n), y(n);
  in.read(reinterpret_cast<char*>(s.data()), n);
  in.read(reinterpret_cast<char*>(y.data()), n);
  if (!in) fail_runtime("I/O error reading embedding file: " + path);

  std::vector<Sample> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (s[i] > 1 || y[i] > 1)
      fail_validation("non-binary s/y byte at record " + std::to_string(i));
    Vec64 x(d);
    for (std::size_t j = 0; j < d; ++j)
      x[j] = static_cast<double>(matrix[i * d + j]);
    samples[i] = Sample{std::move(x), static_cast<int>(s[i]),
                        static_cast<int>(y[i])};
  }
  return samples;
}

void save_embeddings(const std::string& path,
                     const std::vector<Sample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_runtime("cannot write embedding file: " + path);
  const std::uint32_t n = static_cast<std::uint32_t>(samples.size());
  const std::uint32_t d =
      samples.empty() ? 0 : static_cast<std::uint32_t>(samples[0].x.size());
  out.write(kEmbedMagic, 4);
  write_raw(out, n);
  write_raw(out, d);
  for (const auto& smp : samples) {
    if (smp.x.size() != d)
      fail_validation("inconsistent feature dimension while saving");
    for (double v : smp.x) {
      const float f = static_cast<float>(v);
      write_raw(out, f);
    }
  }
  for (const auto& smp : samples)
    write_raw(out, static_cast<std::uint8_t>(smp.s));
  for (const auto& smp : samples)
    write_raw(out, static_cast<std::uint8_t>(smp.y));
  if (!out) fail_runtime("I/O error writing embedding file: " + path);
}

void SynthSpec::validate() const {
  auto prob_open = [](double p, const char* name) {
    if (!(p > 0.0) || !(p < 1.0))
      fail_validation(std::string("synth spec: ") + name +
                      " must lie in (0,1)");
  };
  if (d == 0) fail_validation("synth spec: d must be positive");
  if (!(sigma > 0.0)) fail_validation("synth spec: sigma must be positive");
  // P(S=1)=0 or 1 is allowed as a degenerate marginal; conditionals are not.
  if (!(p_s1 >= 0.0) || !(p_s1 <= 1.0))
    fail_validation("synth spec: p_s1 must lie in [0,1]");
  prob_open(p_y1_given_s0, "p_y1_given_s0");
  prob_open(p_y1_given_s1, "p_y1_given_s1");
  for (int yy = 0; yy < 2; ++yy)
    for (int ss = 0; ss < 2; ++ss)
      if (mean[yy][ss].size() != d)
        fail_validation("synth spec: mean vector dimension mismatch");
}

SynthSpec SynthSpec::axis_aligned(std::size_t d, std::size_t n, double p_s1,
                                  double p_y1_s0, double p_y1_s1,
                                  double label_shift, double attr_shift,
                                  double sigma) {
  SynthSpec spec;
  spec.d = d;
  spec.n = n;
  spec.p_s1 = p_s1;
  spec.p_y1_given_s0 = p_y1_s0;
  spec.p_y1_given_s1 = p_y1_s1;
  spec.sigma = sigma;
  for (int yy = 0; yy < 2; ++yy)
    for (int ss = 0; ss < 2; ++ss) {
      Vec64 mu(d, 0.0);
      mu[0] = (2 * yy - 1) * label_shift;
      if (d > 1) mu[1] = (2 * ss - 1) * attr_shift;
      spec.mean[yy][ss] = std::move(mu);
    }
  return spec;
}

std::vector<Sample> synth_gaussian(const SynthSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<Sample> samples;
  samples.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const int s = rng.bernoulli(spec.p_s1) ? 1 : 0;
    const double py1 = s == 0 ? spec.p_y1_given_s0 : spec.p_y1_given_s1;
    const int y = rng.bernoulli(py1) ? 1 : 0;
    const Vec64& mu = spec.mean[y][s];
    Vec64 x(spec.d);
    for (std::size_t j = 0; j < spec.d; ++j)
      x[j] = mu[j] + spec.sigma * rng.normal();
    samples.push_back(Sample{std::move(x), s, y});
  }
  return samples;
}

std::vector<ClientDataset> partition_fixed(
    const std::vector<Sample>& pool,
    const std::vector<std::pair<std::size_t, std::size_t>>& counts, Rng& rng) {
  std::vector<std::size_t> group[2];
  for (std::size_t i = 0; i < pool.size(); ++i)
    group[pool[i].s].push_back(i);
  rng.shuffle(group[0]);
  rng.shuffle(group[1]);

  std::size_t need[2] = {0, 0};
  for (const auto& [c0, c1] : counts) {
    need[0] += c0;
    need[1] += c1;
  }
  for (int g = 0; g < 2; ++g)
    if (need[g] > group[g].size())
      fail_validation("insufficient samples of group s=" + std::to_string(g) +
                      ": requested " + std::to_string(need[g]) + ", have " +
                      std::to_string(group[g].size()) + " (shortfall " +
                      std::to_string(need[g] - group[g].size()) + ")");

  std::vector<ClientDataset> clients;
  std::size_t cursor[2] = {0, 0};
  int cid = 0;
  for (const auto& [c0, c1] : counts) {
    ClientDataset client;
    client.client_id = cid++;
    client.samples.reserve(c0 + c1);
    for (std::size_t k = 0; k < c0; ++k)
      client.samples.push_back(pool[group[0][cursor[0]++]]);
    for (std::size_t k = 0; k < c1; ++k)
      client.samples.push_back(pool[group[1][cursor[1]++]]);
    clients.push_back(std::move(client));
  }
  return clients;
}

std::vector<ClientDataset> partition_fixed_cells(
    const std::vector<Sample>& pool,
    const std::vector<std::array<std::size_t, 4>>& counts, Rng& rng) {
  // cell index 2*s + y
  std::vector<std::size_t> cell[4];
  for (std::size_t i = 0; i < pool.size(); ++i)
    cell[2 * pool[i].s + pool[i].y].push_back(i);
  for (auto& idx : cell) rng.shuffle(idx);

  std::size_t need[4] = {0, 0, 0, 0};
  for (const auto& c : counts)
    for (int g = 0; g < 4; ++g) need[g] += c[g];
  for (int g = 0; g < 4; ++g)
    if (need[g] > cell[g].size())
      fail_validation("insufficient samples of cell s=" +
                      std::to_string(g / 2) + ",y=" + std::to_string(g % 2) +
                      ": requested " + std::to_string(need[g]) + ", have " +
                      std::to_string(cell[g].size()) + " (shortfall " +
                      std::to_string(need[g] - cell[g].size()) + ")");

  std::vector<ClientDataset> clients;
  std::size_t cursor[4] = {0, 0, 0, 0};
  int cid = 0;
  for (const auto& c : counts) {
    ClientDataset client;
    client.client_id = cid++;
    client.samples.reserve(c[0] + c[1] + c[2] + c[3]);
    for (int g = 0; g < 4; ++g)
      for (std::size_t k = 0; k < c[g]; ++k)
        client.samples.push_back(pool[cell[g][cursor[g]++]]);
    clients.push_back(std::move(client));
  }
  return clients;
}

std::vector<std::pair<std::size_t, std::size_t>> dirichlet_counts(
    const PartitionSpec& spec, Rng& rng) {
  if (spec.num_clients == 0)
    fail_validation("dirichlet partition: num_clients must be positive");
  if (spec.samples_per_client < 2)
    fail_validation("dirichlet partition: samples_per_client must be >= 2");
  if (!(spec.alpha_under > 0.0) || !(spec.alpha_over > 0.0))
    fail_validation("dirichlet partition: alpha values must be positive");
  if (!(spec.fraction_under > 0.0) || !(spec.fraction_under < 1.0))
    fail_validation("dirichlet partition: fraction_under must lie in (0,1)");

  const std::size_t m = spec.num_clients;
  const std::size_t n_under = static_cast<std::size_t>(
      std::ceil(spec.fraction_under * static_cast<double>(m)));

  std::vector<std::pair<std::size_t, std::size_t>> counts;
  counts.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const bool under = i < n_under;
    // Underrepresented clients target s-ratio 8:2, the rest 2:8. Binary
    // Dirichlet reduces to a Beta draw of the s=0 proportion.
    const double target_s0 = under ? 0.8 : 0.2;
    const double alpha = under ? spec.alpha_under : spec.alpha_over;
    const double p0 = rng.beta(alpha * target_s0, alpha * (1.0 - target_s0));
    std::size_t c0 = static_cast<std::size_t>(
        std::lround(p0 * static_cast<double>(spec.samples_per_client)));
    // Each group must keep at least one sample (the KDE penalty is undefined
    // on empty groups).
    c0 = std::clamp<std::size_t>(c0, 1, spec.samples_per_client - 1);
    counts.emplace_back(c0, spec.samples_per_client - c0);
  }
  return counts;
}

std::vector<ClientDataset> partition_dirichlet(const std::vector<Sample>& pool,
                                               const PartitionSpec& spec,
                                               Rng& rng) {
  const auto counts = dirichlet_counts(spec, rng);
  return partition_fixed(pool, counts, rng);
}

TrainTestSplit split_train_test(const std::vector<ClientDataset>& clients,
                                double test_fraction, Rng& rng) {
  if (!(test_fraction > 0.0) || !(test_fraction < 1.0))
    fail_validation("test_fraction must lie in (0,1)");
  TrainTestSplit out;
  for (const auto& client : clients) {
    std::vector<std::size_t> group[2];
    for (std::size_t i = 0; i < client.samples.size(); ++i)
      group[client.samples[i].s].push_back(i);
    ClientDataset train{client.client_id, {}};
    ClientDataset test{client.client_id, {}};
    for (int g = 0; g < 2; ++g) {
      auto& idx = group[g];
      if (idx.size() < 2) {
        for (std::size_t i : idx) train.samples.push_back(client.samples[i]);
        continue;
      }
      rng.shuffle(idx);
      std::size_t n_test = static_cast<std::size_t>(
          std::lround(test_fraction * static_cast<double>(idx.size())));
      n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        auto& dst = i < n_test ? test : train;
        dst.samples.push_back(client.samples[idx[i]]);
      }
    }
    out.train.push_back(std::move(train));
    out.test.push_back(std::move(test));
  }
  return out;
}

}  // namespace fairfl
