#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "numerics.hpp"

using namespace fairfl;

TEST_CASE("dot") {
  Vec64 a{1, 2}, b{3, 4};
  CHECK(dot(a, b) == 11.0);
  Vec64 c{1, 2, 3};
  CHECK_THROWS_AS(dot(a, c), Error);
  try {
    dot(a, c);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::validation);
    CHECK(std::string(e.what()).find("2") != std::string::npos);
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("axpy and matvec") {
  Vec64 x{1, 2, 3}, y{10, 20, 30};
  axpy(2.0, x, y);
  CHECK(y == Vec64{12, 24, 36});

  const Mat64 eye = Mat64::identity(3);
  CHECK(matvec(eye, x) == x);

  Mat64 m(2, 3);
  m.at(0, 0) = 1;
  m.at(0, 2) = 2;
  m.at(1, 1) = -1;
  const Vec64 out = matvec(m, x);
  CHECK(out == Vec64{7, -2});
  CHECK_THROWS_AS(matvec(m, Vec64{1, 2}), Error);
}

TEST_CASE("mean_reduce and norm2") {
  CHECK(mean_reduce(Vec64{2, 4, 6}) == 4.0);
  CHECK_THROWS_AS(mean_reduce(Vec64{}), Error);
  CHECK(norm2(Vec64{3, 4}) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("normal_cdf values") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.96) == doctest::Approx(0.9750).epsilon(1e-4));
  CHECK(normal_cdf(-40.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(normal_cdf(40.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("normal_cdf symmetry and monotonicity") {
  Rng rng(7, 0);
  std::vector<double> zs(10000);
  for (double& z : zs) z = rng.uniform(-8.0, 8.0);
  for (double z : zs)
    CHECK(std::abs(normal_cdf(z) + normal_cdf(-z) - 1.0) < 1e-12);
  std::sort(zs.begin(), zs.end());
  for (std::size_t i = 1; i < zs.size(); ++i)
    CHECK(normal_cdf(zs[i]) >= normal_cdf(zs[i - 1]));
}

TEST_CASE("normal_pdf") {
  CHECK(normal_pdf(0.0) == doctest::Approx(0.39894).epsilon(1e-5));
  CHECK(normal_pdf(3.0) == normal_pdf(-3.0));
  // pdf is the derivative of the cdf
  const double h = 1e-5;
  const double fd = (normal_cdf(0.7 + h) - normal_cdf(0.7 - h)) / (2 * h);
  CHECK(std::abs(fd - normal_pdf(0.7)) < 1e-6);
}

TEST_CASE("rng determinism and stream separation") {
  Rng a(42, 3), b(42, 3), c(42, 4);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t va = a.next_u64();
    all_equal = all_equal && (va == b.next_u64());
    any_diff = any_diff || (va != c.next_u64());
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("rng uniform ranges") {
  Rng rng(1, 0);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 1000; ++i) CHECK(rng.uniform_below(7) < 7);
  CHECK_THROWS_AS(rng.uniform_below(0), Error);
}

TEST_CASE("rng bernoulli degenerate") {
  Rng rng(5, 0);
  for (int i = 0; i < 100; ++i) {
    CHECK(!rng.bernoulli(0.0));
    CHECK(rng.bernoulli(1.0));
  }
}

TEST_CASE("rng normal moments") {
  Rng rng(9, 1);
  const int n = 50000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("rng gamma and beta moments") {
  Rng rng(11, 2);
  const int n = 20000;
  double gsum = 0.0;
  for (int i = 0; i < n; ++i) gsum += rng.gamma(2.5);
  CHECK(std::abs(gsum / n - 2.5) < 0.1);

  double bsum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = rng.beta(2.0, 3.0);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    bsum += v;
  }
  CHECK(std::abs(bsum / n - 0.4) < 0.02);
  CHECK_THROWS_AS(rng.gamma(0.0), Error);
}

TEST_CASE("rng shuffle is a deterministic permutation") {
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  std::vector<int> w = v;
  Rng r1(13, 0), r2(13, 0);
  r1.shuffle(v);
  r2.shuffle(w);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("interleaved streams stay uniform (chi-square)") {
  // Interleave two streams of the same master seed; the pooled sample should
  // still look uniform. 20 bins, 40000 draws, df=19; the 0.01 critical value
  // is 36.19.
  Rng a(2024, 1), b(2024, 2);
  const int bins = 20, n = 40000;
  std::vector<int> count(bins, 0);
  for (int i = 0; i < n / 2; ++i) {
    count[static_cast<int>(a.uniform01() * bins)]++;
    count[static_cast<int>(b.uniform01() * bins)]++;
  }
  const double expect = static_cast<double>(n) / bins;
  double chi2 = 0.0;
  for (int c : count) {
    const double d = c - expect;
    chi2 += d * d / expect;
  }
  CHECK(chi2 < 36.19);
}
