#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairfl {

// Error taxonomy shared by all modules. Validation errors map to exit/status
// code 1, runtime errors to 2.
enum class ErrorKind { validation, runtime };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_validation(const std::string& msg) {
  throw Error(ErrorKind::validation, msg);
}
[[noreturn]] inline void fail_runtime(const std::string& msg) {
  throw Error(ErrorKind::runtime, msg);
}

using Vec64 = std::vector<double>;

struct Mat64 {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec64 data;  // row-major

  Mat64() = default;
  Mat64(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  static Mat64 identity(std::size_t n);
};

// Vector kernels. Summation order is sequential left-to-right so results are
// bit-reproducible run to run.
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
Vec64 matvec(const Mat64& m, std::span<const double> x);
double mean_reduce(std::span<const double> v);
double norm2(std::span<const double> v);

// Standard normal CDF/PDF used by the kernel-smoothed fairness penalty.
double normal_cdf(double z);
double normal_pdf(double z);

// Seeded splittable generator (xoshiro256**). Two Rng constructed with equal
// (master_seed, stream_id) produce identical sequences; distinct stream ids
// give independent streams.
class Rng {
 public:
  Rng(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform01();
  double uniform(double lo, double hi);
  // Unbiased integer in [0, n).
  std::uint64_t uniform_below(std::uint64_t n);
  bool bernoulli(double p);
  // Standard normal via Box-Muller (one value per call).
  double normal();
  // Gamma(shape, 1) by Marsaglia-Tsang.
  double gamma(double shape);
  double beta(double a, double b);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace fairfl
