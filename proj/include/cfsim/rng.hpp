// SPDX-License-Identifier: Apache-2.0

#ifndef CFSIM_RNG_HPP
#define CFSIM_RNG_HPP

#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace cfsim::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based substream derivation: (master seed, counter, stage tag) maps
/// to an independent engine seed. Stages of a trial can be re-drawn in
/// isolation and trials can run on any worker without order coupling.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t counter,
                                    std::string_view tag) {
  std::uint64_t state = master;
  splitmix64(state);
  state ^= 0x9e3779b97f4a7c15ULL * (counter + 1);
  splitmix64(state);
  state ^= fnv1a(tag);
  return splitmix64(state);
}

/// One random stream: a seeded engine plus stateful distributions. Streams are
/// created per (trial, stage) and never shared across threads.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : eng_(seed) {}

  double gauss() { return norm_(eng_); }
  double uniform() { return unif_(eng_); }  // [0, 1)
  std::uint64_t bits() { return eng_(); }

  /// Standard circularly-symmetric complex Gaussian, unit total variance.
  std::complex<double> cgauss() {
    const double s = 0.7071067811865475244;  // 1/sqrt(2)
    double re = norm_(eng_);
    double im = norm_(eng_);
    return {re * s, im * s};
  }

  /// Uniform integer in [0, n).
  int index(int n) {
    std::uniform_int_distribution<int> d(0, n - 1);
    return d(eng_);
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> norm_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

inline Stream make_stream(std::uint64_t master, std::uint64_t counter,
                          std::string_view tag) {
  return Stream(substream_seed(master, counter, tag));
}

}  // namespace cfsim::rng

#endif  // CFSIM_RNG_HPP
