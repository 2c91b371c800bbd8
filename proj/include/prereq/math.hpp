#ifndef PREREQ_MATH_HPP
#define PREREQ_MATH_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace prereq {

// Digamma via recurrence into the asymptotic region. Accurate to ~1e-13 for x > 0.
double digamma(double x);

// Dense row-major matrix. Small enough for this project; no BLAS.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

  double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }
  double* row(int i) { return data.data() + static_cast<size_t>(i) * cols; }
  const double* row(int i) const { return data.data() + static_cast<size_t>(i) * cols; }
};

// Seed derivation for independent sub-streams (splits, negative sampling, ...).
uint64_t splitmix64(uint64_t x);

// Deterministic RNG wrapper. All draws go through explicit helpers so output
// is identical across platforms and standard library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n) without modulo bias.
  uint64_t uniform_int(uint64_t n);

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = uniform_int(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// In-place softmax of a length-n row, max-subtracted before exponentiation.
void softmax_inplace(double* x, int n);

// log(sum(exp(x))) over a length-n row, max-subtracted.
double log_sum_exp(const double* x, int n);

}  // namespace prereq

#endif
