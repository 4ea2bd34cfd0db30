#include "config.hpp"

#include <fstream>
#include <sstream>

namespace fairfl {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(trim(cur));
  return parts;
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    fail_validation("config key '" + key + "': expected a number, got '" + v +
                    "'");
  }
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    fail_validation("config key '" + key +
                    "': expected a nonnegative integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail_validation("config key '" + key + "': expected true/false, got '" + v +
                  "'");
}

template <class T, class F>
std::vector<T> parse_list(const std::string& v, const std::string& key, F f) {
  std::vector<T> out;
  for (const auto& part : split(v, ','))
    if (!part.empty()) out.push_back(f(part, key));
  if (out.empty()) fail_validation("config key '" + key + "': empty list");
  return out;
}

void set_key(ExperimentConfig& cfg, const std::string& section,
             const std::string& key, const std::string& value) {
  const std::string full = section + "." + key;
  if (section == "dataset") {
    auto& d = cfg.dataset;
    if (key == "source") {
      if (value == "synth") d.source = DataSource::synth;
      else if (value == "csv") d.source = DataSource::csv;
      else if (value == "embeddings") d.source = DataSource::embeddings;
      else fail_validation("config: unknown dataset source '" + value + "'");
    } else if (key == "csv_train") d.csv_train = value;
    else if (key == "csv_test") d.csv_test = value;
    else if (key == "csv_s_col") d.csv_schema.s_col = value;
    else if (key == "csv_y_col") d.csv_schema.y_col = value;
    else if (key == "csv_feature_cols")
      d.csv_schema.feature_cols = split(value, ',');
    else if (key == "embeddings_path") d.embeddings_path = value;
    else if (key == "synth_n") d.synth_n = parse_u64(value, full);
    else if (key == "synth_d") d.synth_d = parse_u64(value, full);
    else if (key == "synth_p_s1") d.synth_p_s1 = parse_double(value, full);
    else if (key == "synth_p_y1_s0") d.synth_p_y1_s0 = parse_double(value, full);
    else if (key == "synth_p_y1_s1") d.synth_p_y1_s1 = parse_double(value, full);
    else if (key == "synth_label_shift")
      d.synth_label_shift = parse_double(value, full);
    else if (key == "synth_attr_shift")
      d.synth_attr_shift = parse_double(value, full);
    else if (key == "synth_sigma") d.synth_sigma = parse_double(value, full);
    else if (key == "test_fraction") d.test_fraction = parse_double(value, full);
    else fail_validation("config: unknown key '" + full + "'");
  } else if (section == "partition") {
    auto& p = cfg.partition;
    if (key == "mode") {
      if (value == "fixed") {
        p.mode = PartitionSpec::Mode::fixed;
        cfg.partition_enabled = true;
      } else if (value == "dirichlet") {
        p.mode = PartitionSpec::Mode::dirichlet;
        cfg.partition_enabled = true;
      } else if (value == "none") {
        cfg.partition_enabled = false;
      } else {
        fail_validation("config: unknown partition mode '" + value + "'");
      }
    } else if (key == "counts") {
      // per-client group counts s0:s1, or per-client (s,y) cell counts
      // s0y0:s0y1:s1y0:s1y1; the two forms cannot be mixed
      p.fixed_counts.clear();
      p.fixed_cell_counts.clear();
      for (const auto& pair : split(value, ',')) {
        const auto fields = split(pair, ':');
        if (fields.size() == 2) {
          p.fixed_counts.emplace_back(parse_u64(fields[0], full),
                                      parse_u64(fields[1], full));
        } else if (fields.size() == 4) {
          p.fixed_cell_counts.push_back(
              {parse_u64(fields[0], full), parse_u64(fields[1], full),
               parse_u64(fields[2], full), parse_u64(fields[3], full)});
        } else {
          fail_validation("config key '" + full +
                          "': expected s0:s1 pairs or s0y0:s0y1:s1y0:s1y1 "
                          "quadruples, got '" +
                          pair + "'");
        }
      }
      if (!p.fixed_counts.empty() && !p.fixed_cell_counts.empty())
        fail_validation("config key '" + full +
                        "': cannot mix s0:s1 pairs with (s,y) quadruples");
    } else if (key == "num_clients") p.num_clients = parse_u64(value, full);
    else if (key == "fraction_under")
      p.fraction_under = parse_double(value, full);
    else if (key == "alpha_under") p.alpha_under = parse_double(value, full);
    else if (key == "alpha_over") p.alpha_over = parse_double(value, full);
    else if (key == "samples_per_client")
      p.samples_per_client = parse_u64(value, full);
    else fail_validation("config: unknown key '" + full + "'");
  } else if (section == "train") {
    auto& t = cfg.train;
    if (key == "algorithm") t.algorithm = algorithm_from_string(value);
    else if (key == "rounds") t.rounds = static_cast<int>(parse_u64(value, full));
    else if (key == "inner_steps")
      t.inner_steps = static_cast<int>(parse_u64(value, full));
    else if (key == "outer_step") t.outer_step = parse_double(value, full);
    else if (key == "inner_step") t.inner_step = parse_double(value, full);
    else if (key == "lambda") t.lambda = parse_double(value, full);
    else if (key == "gamma") t.gamma = parse_double(value, full);
    else if (key == "eta") t.fairness.eta = parse_double(value, full);
    else if (key == "bandwidth") t.fairness.bandwidth_h = parse_double(value, full);
    else if (key == "inner_objective") {
      if (value == "fair") t.inner_objective = InnerObjective::fair;
      else if (value == "clean") t.inner_objective = InnerObjective::clean;
      else fail_validation("config: unknown inner_objective '" + value + "'");
    } else if (key == "participation")
      t.participation = parse_double(value, full);
    else if (key == "seed") t.seed = parse_u64(value, full);
    else if (key == "arch") {
      if (value == "linear") t.arch = Arch::linear;
      else if (value == "mlp") t.arch = Arch::mlp;
      else fail_validation("config: unknown arch '" + value + "'");
    } else if (key == "hidden") {
      t.hidden = parse_list<std::size_t>(
          value, full, [](const std::string& v, const std::string& k) {
            return static_cast<std::size_t>(parse_u64(v, k));
          });
    } else fail_validation("config: unknown key '" + full + "'");
  } else if (section == "sweep") {
    auto& s = cfg.sweep;
    if (key == "etas")
      s.etas = parse_list<double>(value, full, parse_double);
    else if (key == "lambdas")
      s.lambdas = parse_list<double>(value, full, parse_double);
    else if (key == "seeds")
      s.seeds = parse_list<std::uint64_t>(value, full, parse_u64);
    else if (key == "parallel") s.parallel = parse_bool(value, full);
    else fail_validation("config: unknown key '" + full + "'");
  } else if (section == "output") {
    auto& o = cfg.output;
    if (key == "dir") o.dir = value;
    else if (key == "round_logs") o.round_logs = parse_bool(value, full);
    else if (key == "checkpoint") o.checkpoint = parse_bool(value, full);
    else fail_validation("config: unknown key '" + full + "'");
  } else {
    fail_validation("config: unknown section '" + section + "'");
  }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  cfg.source_text = text;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail_validation("config line " + std::to_string(lineno) +
                        ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail_validation("config line " + std::to_string(lineno) +
                      ": expected key = value");
    if (section.empty())
      fail_validation("config line " + std::to_string(lineno) +
                      ": key outside any section");
    set_key(cfg, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_validation("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value) {
  const auto dotpos = key.find('.');
  if (dotpos == std::string::npos)
    fail_validation("override key must be section.key, got '" + key + "'");
  set_key(cfg, key.substr(0, dotpos), key.substr(dotpos + 1), value);
  cfg.source_text += "\n# override: " + key + " = " + value;
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  const auto& d = cfg.dataset;
  out << "[dataset]\n";
  out << "source = "
      << (d.source == DataSource::synth ? "synth"
          : d.source == DataSource::csv ? "csv"
                                        : "embeddings")
      << "\n";
  if (!d.csv_train.empty()) out << "csv_train = " << d.csv_train << "\n";
  if (!d.csv_test.empty()) out << "csv_test = " << d.csv_test << "\n";
  out << "csv_s_col = " << d.csv_schema.s_col << "\n";
  out << "csv_y_col = " << d.csv_schema.y_col << "\n";
  if (!d.csv_schema.feature_cols.empty()) {
    out << "csv_feature_cols = ";
    for (std::size_t i = 0; i < d.csv_schema.feature_cols.size(); ++i)
      out << (i ? "," : "") << d.csv_schema.feature_cols[i];
    out << "\n";
  }
  if (!d.embeddings_path.empty())
    out << "embeddings_path = " << d.embeddings_path << "\n";
  out << "synth_n = " << d.synth_n << "\n";
  out << "synth_d = " << d.synth_d << "\n";
  out << "synth_p_s1 = " << num(d.synth_p_s1) << "\n";
  out << "synth_p_y1_s0 = " << num(d.synth_p_y1_s0) << "\n";
  out << "synth_p_y1_s1 = " << num(d.synth_p_y1_s1) << "\n";
  out << "synth_label_shift = " << num(d.synth_label_shift) << "\n";
  out << "synth_attr_shift = " << num(d.synth_attr_shift) << "\n";
  out << "synth_sigma = " << num(d.synth_sigma) << "\n";
  out << "test_fraction = " << num(d.test_fraction) << "\n";

  const auto& p = cfg.partition;
  out << "[partition]\n";
  if (!cfg.partition_enabled) {
    out << "mode = none\n";
  } else if (p.mode == PartitionSpec::Mode::fixed) {
    out << "mode = fixed\n";
    if (!p.fixed_cell_counts.empty() || !p.fixed_counts.empty()) {
      out << "counts = ";
      if (!p.fixed_cell_counts.empty()) {
        for (std::size_t i = 0; i < p.fixed_cell_counts.size(); ++i) {
          const auto& c = p.fixed_cell_counts[i];
          out << (i ? ", " : "") << c[0] << ":" << c[1] << ":" << c[2] << ":"
              << c[3];
        }
      } else {
        for (std::size_t i = 0; i < p.fixed_counts.size(); ++i)
          out << (i ? ", " : "") << p.fixed_counts[i].first << ":"
              << p.fixed_counts[i].second;
      }
      out << "\n";
    }
  } else {
    out << "mode = dirichlet\n";
    out << "num_clients = " << p.num_clients << "\n";
    out << "fraction_under = " << num(p.fraction_under) << "\n";
    out << "alpha_under = " << num(p.alpha_under) << "\n";
    out << "alpha_over = " << num(p.alpha_over) << "\n";
    out << "samples_per_client = " << p.samples_per_client << "\n";
  }

  const auto& t = cfg.train;
  out << "[train]\n";
  out << "algorithm = " << algorithm_to_string(t.algorithm) << "\n";
  out << "arch = " << (t.arch == Arch::linear ? "linear" : "mlp") << "\n";
  if (!t.hidden.empty()) {
    out << "hidden = ";
    for (std::size_t i = 0; i < t.hidden.size(); ++i)
      out << (i ? "," : "") << t.hidden[i];
    out << "\n";
  }
  out << "rounds = " << t.rounds << "\n";
  out << "inner_steps = " << t.inner_steps << "\n";
  out << "outer_step = " << num(t.outer_step) << "\n";
  out << "inner_step = " << num(t.inner_step) << "\n";
  out << "lambda = " << num(t.lambda) << "\n";
  out << "gamma = " << num(t.gamma) << "\n";
  out << "eta = " << num(t.fairness.eta) << "\n";
  out << "bandwidth = " << num(t.fairness.bandwidth_h) << "\n";
  out << "inner_objective = "
      << (t.inner_objective == InnerObjective::fair ? "fair" : "clean")
      << "\n";
  out << "participation = " << num(t.participation) << "\n";
  out << "seed = " << t.seed << "\n";

  const auto& s = cfg.sweep;
  out << "[sweep]\n";
  if (!s.etas.empty()) {
    out << "etas = ";
    for (std::size_t i = 0; i < s.etas.size(); ++i)
      out << (i ? "," : "") << num(s.etas[i]);
    out << "\n";
  }
  if (!s.lambdas.empty()) {
    out << "lambdas = ";
    for (std::size_t i = 0; i < s.lambdas.size(); ++i)
      out << (i ? "," : "") << num(s.lambdas[i]);
    out << "\n";
  }
  if (!s.seeds.empty()) {
    out << "seeds = ";
    for (std::size_t i = 0; i < s.seeds.size(); ++i)
      out << (i ? "," : "") << s.seeds[i];
    out << "\n";
  }
  out << "parallel = " << (s.parallel ? "true" : "false") << "\n";

  out << "[output]\n";
  out << "dir = " << cfg.output.dir << "\n";
  out << "round_logs = " << (cfg.output.round_logs ? "true" : "false") << "\n";
  out << "checkpoint = " << (cfg.output.checkpoint ? "true" : "false") << "\n";
  return out.str();
}

std::string config_hash_hex(const std::string& text) {
  // FNV-1a, 64-bit.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace fairfl
