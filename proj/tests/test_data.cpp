#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "data.hpp"

using namespace fairfl;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "fairfl_data_test";
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string write_file(const std::string& name, const std::string& body) {
  const fs::path p = temp_dir() / name;
  std::ofstream out(p, std::ios::binary);
  out << body;
  return p.string();
}

}  // namespace

TEST_CASE("load_csv toy file") {
  const auto path = write_file("toy.csv",
                               "f1,f2,s,y\n"
                               "1.0,5.0,0,1\n"
                               "2.0,5.0,1,0\n"
                               "3.0,5.0,0,1\n");
  const auto loaded = load_csv(path, CsvSchema{});
  REQUIRE(loaded.samples.size() == 3);
  CHECK(loaded.samples[0].x.size() == 2);
  CHECK(loaded.samples[1].s == 1);
  CHECK(loaded.samples[2].y == 1);

  // f1 standardized to zero mean / unit variance
  double mean = 0.0;
  for (const auto& smp : loaded.samples) mean += smp.x[0];
  CHECK(std::abs(mean / 3.0) < 1e-12);
  // f2 is constant: variance floor maps it to all zeros
  for (const auto& smp : loaded.samples) CHECK(smp.x[1] == 0.0);
}

TEST_CASE("load_csv error paths") {
  const auto short_row = write_file("short.csv", "f1,s,y\n1.0,0\n");
  CHECK_THROWS_WITH_AS(load_csv(short_row, CsvSchema{}),
                       doctest::Contains("row 2"), Error);

  const auto bad_s = write_file("bads.csv", "f1,s,y\n1.0,2,0\n");
  CHECK_THROWS_WITH_AS(load_csv(bad_s, CsvSchema{}), doctest::Contains("'2'"),
                       Error);

  const auto bad_num = write_file("badnum.csv", "f1,s,y\n12x,0,0\n");
  CHECK_THROWS_WITH_AS(load_csv(bad_num, CsvSchema{}),
                       doctest::Contains("12x"), Error);

  CHECK_THROWS_AS(load_csv((temp_dir() / "missing.csv").string(), CsvSchema{}),
                  Error);
}

TEST_CASE("load_csv_with_stats reuses training statistics") {
  const auto train = write_file("tr.csv", "f1,s,y\n0.0,0,0\n2.0,1,1\n");
  const auto test = write_file("te.csv", "f1,s,y\n1.0,0,1\n");
  const auto loaded = load_csv(train, CsvSchema{});
  const auto test_samples = load_csv_with_stats(test, CsvSchema{}, loaded.stats);
  // Train mean 1.0, stdev 1.0, so the test value 1.0 maps to exactly 0.
  REQUIRE(test_samples.size() == 1);
  CHECK(test_samples[0].x[0] == doctest::Approx(0.0).epsilon(1e-12));

  const auto wide = write_file("wide.csv", "f1,f2,s,y\n1,2,0,0\n");
  CHECK_THROWS_AS(load_csv_with_stats(wide, CsvSchema{}, loaded.stats), Error);
}

TEST_CASE("embedding round trip") {
  std::vector<Sample> samples{
      Sample{{1.0, 2.0, 3.0}, 0, 1},
      Sample{{-0.5, 0.25, 4.0}, 1, 0},
  };
  const auto path = (temp_dir() / "emb.bin").string();
  save_embeddings(path, samples);
  const auto loaded = load_embeddings(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].x == samples[0].x);  // values exactly representable in f32
  CHECK(loaded[1].s == 1);
  CHECK(loaded[1].y == 0);
}

TEST_CASE("embedding truncation reports byte counts") {
  std::vector<Sample> samples{Sample{{1.0, 2.0}, 0, 1}, Sample{{3.0, 4.0}, 1, 0}};
  const auto path = (temp_dir() / "trunc.bin").string();
  save_embeddings(path, samples);
  const auto full = fs::file_size(path);
  fs::resize_file(path, full - 3);
  CHECK_THROWS_WITH_AS(load_embeddings(path),
                       doctest::Contains(std::to_string(full).c_str()), Error);
}

TEST_CASE("embedding bad magic") {
  const auto path = write_file("notemb.bin", "XXXX12345678....");
  CHECK_THROWS_WITH_AS(load_embeddings(path), doctest::Contains("magic"),
                       Error);
}

TEST_CASE("synth degenerate cases") {
  Rng rng(1, 0);
  auto spec = SynthSpec::axis_aligned(2, 0, 0.5, 0.7, 0.3, 1.5, 1.0, 1.0);
  CHECK(synth_gaussian(spec, rng).empty());

  spec.n = 200;
  spec.p_s1 = 1.0;
  for (const auto& smp : synth_gaussian(spec, rng)) CHECK(smp.s == 1);

  spec.p_y1_given_s0 = 0.0;  // conditionals must stay in the open interval
  CHECK_THROWS_AS(synth_gaussian(spec, rng), Error);
}

TEST_CASE("synth empirical rates match the requested rates") {
  Rng rng(3, 0);
  const auto spec =
      SynthSpec::axis_aligned(2, 100000, 0.5, 0.7, 0.3, 1.5, 1.0, 1.0);
  const auto samples = synth_gaussian(spec, rng);
  double n[2] = {0, 0}, pos[2] = {0, 0};
  for (const auto& smp : samples) {
    n[smp.s] += 1;
    pos[smp.s] += smp.y;
  }
  CHECK(std::abs(pos[0] / n[0] - 0.7) < 0.01);
  CHECK(std::abs(pos[1] / n[1] - 0.3) < 0.01);
  CHECK(std::abs(n[1] / samples.size() - 0.5) < 0.01);
}

TEST_CASE("partition_fixed exact counts, disjoint shards") {
  Rng gen(4, 0);
  const auto spec =
      SynthSpec::axis_aligned(2, 3000, 0.5, 0.7, 0.3, 1.5, 1.0, 1.0);
  const auto pool = synth_gaussian(spec, gen);

  Rng rng(4, 1);
  const std::vector<std::pair<std::size_t, std::size_t>> counts{
      {200, 40}, {40, 200}, {100, 100}};
  const auto clients = partition_fixed(pool, counts, rng);
  REQUIRE(clients.size() == 3);
  std::set<const void*> seen;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    std::size_t c0 = 0, c1 = 0;
    for (const auto& smp : clients[i].samples) (smp.s == 0 ? c0 : c1)++;
    CHECK(c0 == counts[i].first);
    CHECK(c1 == counts[i].second);
    CHECK(clients[i].has_both_groups());
  }
}

TEST_CASE("partition_fixed single client identity and shortfall error") {
  std::vector<Sample> pool{Sample{{0.0}, 0, 0}, Sample{{1.0}, 1, 1}};
  Rng rng(1, 0);
  const auto all = partition_fixed(pool, {{1, 1}}, rng);
  REQUIRE(all.size() == 1);
  CHECK(all[0].samples.size() == 2);

  Rng rng2(1, 0);
  CHECK_THROWS_WITH_AS(partition_fixed(pool, {{5, 1}}, rng2),
                       doctest::Contains("s=0"), Error);
  Rng rng3(1, 0);
  CHECK_THROWS_WITH_AS(partition_fixed(pool, {{1, 3}}, rng3),
                       doctest::Contains("shortfall 2"), Error);
}

TEST_CASE("partition_fixed_cells pins per-group label rates") {
  Rng gen(6, 0);
  const auto spec =
      SynthSpec::axis_aligned(2, 6000, 0.5, 0.5, 0.5, 1.5, 1.0, 1.0);
  const auto pool = synth_gaussian(spec, gen);

  Rng rng(6, 1);
  const std::vector<std::array<std::size_t, 4>> counts{{160, 640, 10, 190},
                                                       {40, 60, 320, 80}};
  const auto clients = partition_fixed_cells(pool, counts, rng);
  REQUIRE(clients.size() == 2);
  for (std::size_t i = 0; i < clients.size(); ++i) {
    std::size_t cell[4] = {0, 0, 0, 0};
    for (const auto& smp : clients[i].samples) ++cell[2 * smp.s + smp.y];
    for (int c = 0; c < 4; ++c) CHECK(cell[c] == counts[i][c]);
  }

  // Same seed, same shards.
  Rng rng2(6, 1);
  const auto again = partition_fixed_cells(pool, counts, rng2);
  for (std::size_t i = 0; i < clients.size(); ++i)
    for (std::size_t j = 0; j < clients[i].samples.size(); ++j)
      CHECK(clients[i].samples[j].x == again[i].samples[j].x);
}

TEST_CASE("partition_fixed_cells shortfall names the (s,y) cell") {
  std::vector<Sample> pool{Sample{{0.0}, 0, 0}, Sample{{1.0}, 1, 1}};
  Rng rng(1, 0);
  CHECK_THROWS_WITH_AS(
      partition_fixed_cells(pool, {{{1, 2, 0, 0}}}, rng),
      doctest::Contains("s=0,y=1"), Error);
}

TEST_CASE("dirichlet counts concentrate at large alpha") {
  PartitionSpec spec;
  spec.mode = PartitionSpec::Mode::dirichlet;
  spec.num_clients = 20;
  spec.fraction_under = 0.2;
  spec.alpha_under = 1e6;
  spec.alpha_over = 1e6;
  spec.samples_per_client = 1000;
  Rng rng(17, 0);
  const auto counts = dirichlet_counts(spec, rng);
  REQUIRE(counts.size() == 20);
  // First ceil(0.2*20)=4 clients target s0:s1 = 8:2, the rest 2:8.
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double frac_s0 =
        static_cast<double>(counts[i].first) / spec.samples_per_client;
    const double target = i < 4 ? 0.8 : 0.2;
    CHECK(std::abs(frac_s0 - target) < 0.02);
    CHECK(counts[i].first >= 1);
    CHECK(counts[i].second >= 1);
  }
}

TEST_CASE("dirichlet partition determinism") {
  Rng gen(5, 0);
  const auto spec =
      SynthSpec::axis_aligned(2, 4000, 0.5, 0.7, 0.3, 1.5, 1.0, 1.0);
  const auto pool = synth_gaussian(spec, gen);
  PartitionSpec pspec;
  pspec.mode = PartitionSpec::Mode::dirichlet;
  pspec.num_clients = 5;
  pspec.fraction_under = 0.2;
  pspec.alpha_under = 0.5;
  pspec.alpha_over = 1.0;
  pspec.samples_per_client = 300;

  Rng r1(99, 0), r2(99, 0);
  const auto a = partition_dirichlet(pool, pspec, r1);
  const auto b = partition_dirichlet(pool, pspec, r2);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].samples.size() == b[i].samples.size());
    for (std::size_t j = 0; j < a[i].samples.size(); ++j)
      CHECK(a[i].samples[j].x == b[i].samples[j].x);
  }
}

TEST_CASE("split_train_test stratifies by sensitive group") {
  Rng gen(6, 0);
  const auto spec =
      SynthSpec::axis_aligned(2, 400, 0.5, 0.7, 0.3, 1.5, 1.0, 1.0);
  ClientDataset client{0, synth_gaussian(spec, gen)};
  Rng rng(6, 1);
  const auto split = split_train_test({client}, 0.25, rng);
  REQUIRE(split.train.size() == 1);
  REQUIRE(split.test.size() == 1);
  CHECK(split.train[0].samples.size() + split.test[0].samples.size() == 400);
  std::size_t test_g[2] = {0, 0}, all_g[2] = {0, 0};
  for (const auto& smp : client.samples) all_g[smp.s]++;
  for (const auto& smp : split.test[0].samples) test_g[smp.s]++;
  for (int g = 0; g < 2; ++g) {
    const double frac =
        static_cast<double>(test_g[g]) / static_cast<double>(all_g[g]);
    CHECK(std::abs(frac - 0.25) < 0.01);
  }
  CHECK_THROWS_AS(split_train_test({client}, 0.0, rng), Error);
  CHECK_THROWS_AS(split_train_test({client}, 1.0, rng), Error);
}

TEST_CASE("split_train_test keeps singleton groups in train") {
  ClientDataset client{0, {Sample{{0.0}, 0, 0}, Sample{{1.0}, 1, 1},
                           Sample{{2.0}, 1, 0}}};
  Rng rng(1, 0);
  const auto split = split_train_test({client}, 0.5, rng);
  bool s0_in_train = false;
  for (const auto& smp : split.train[0].samples)
    if (smp.s == 0) s0_in_train = true;
  CHECK(s0_in_train);
  for (const auto& smp : split.test[0].samples) CHECK(smp.s == 1);
}
