#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace eradate {

// Deterministic random source used everywhere in the library.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The std:: distributions are implementation-defined, so every
// derived quantity (uniform reals, bounded integers, normals, shuffles) is
// computed here from raw engine output. Runs with the same seed therefore
// reproduce bit-exactly across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling removes modulo bias.
  std::uint64_t uniform_int(std::uint64_t n);

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    uniform_int(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Standard normal via Box-Muller (no cached second value).
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Fisher-Yates shuffle of indices.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derives an independent child seed; used to give sub-tasks their own
  // streams without coupling them to the parent's consumption order.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t salt);

 private:
  std::mt19937_64 engine_;
};

}  // namespace eradate
