#pragma once

// Per-path random streams. Each path owns an mt19937_64 seeded from a
// splitmix64 mix of (seed, path index); normals come from the Marsaglia
// polar method implemented here so the stream does not depend on the
// standard library's distribution implementation.

#include <cmath>
#include <cstdint>
#include <random>

namespace kfspec {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path) {
  return splitmix64(splitmix64(seed) ^ splitmix64(path + 0x632BE59BD9B4E019ull));
}

class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t path) : engine_(path_seed(seed, path)) {}

  /// Uniform on (-1, 1) from the top 53 bits.
  double uniform_pm1() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-52 - 1.0;
  }

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = uniform_pm1();
      v = uniform_pm1();
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace kfspec
