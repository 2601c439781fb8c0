#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "qapdc/types.hpp"

namespace qapdc {

// Deterministic gaussian/uniform sampling on top of mt19937_64 raw output.
// The std distributions are implementation-defined, which would make seeds
// non-portable across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(static_cast<double>(hi - lo + 1) * uniform());
  }

  // Box-Muller; caches the second variate.
  double gaussian() {
    if (has_cache_) {
      has_cache_ = false;
      return cache_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cache_ = r * std::sin(theta);
    has_cache_ = true;
    return r * std::cos(theta);
  }

  Matrix gaussian_matrix(int rows, int cols) {
    Matrix M(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) M(i, j) = gaussian();
    return M;
  }

  Vector gaussian_vector(int size) {
    Vector v(size);
    for (int i = 0; i < size; ++i) v(i) = gaussian();
    return v;
  }

  // Derive an independent stream for sub-task `index` (splitmix64 step).
  static std::uint64_t derive(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 gen_;
  double cache_ = 0.0;
  bool has_cache_ = false;
};

}  // namespace qapdc
