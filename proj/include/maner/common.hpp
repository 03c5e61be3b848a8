#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace maner {

// ----------------------------- errors -----------------------------
// Config/usage problems map to CLI exit code 2, training failures to 3.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// ----------------------------- rng -----------------------------
// xoshiro256** seeded via splitmix64. Self-contained so the streams are
// identical across platforms and standard-library versions; libstdc++'s
// distributions are implementation-defined and would break byte-identical
// dataset generation.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& word : state_) {
      word = splitmix64(x);
    }
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // uniform double in [0, 1); exact dyadic rational, portable.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform integer in [0, bound); bound must be > 0.
  uint64_t below(uint64_t bound) {
    // modulo with rejection of the biased tail
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t x = next_u64();
    while (x >= limit) {
      x = next_u64();
    }
    return x % bound;
  }

  size_t index(size_t bound) { return static_cast<size_t>(below(bound)); }

  // standard normal via Box-Muller; consumes exactly two uniforms per call.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) {
      u1 = uniform();
    }
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) {
      return;
    }
    for (size_t i = v.size() - 1; i > 0; --i) {
      const size_t j = index(i + 1);
      std::swap(v[i], v[j]);
    }
  }

  // Derives an independent sub-seed from (seed, tag, index). Used to give
  // every purpose (shuffling, masking, dropout, ...) its own stream so that
  // consuming randomness in one never perturbs another.
  static uint64_t derive(uint64_t seed, std::string_view tag, uint64_t index = 0) {
    uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the tag
    for (const char c : tag) {
      h ^= static_cast<uint8_t>(c);
      h *= 0x100000001b3ULL;
    }
    uint64_t x = seed ^ h;
    x = splitmix64(x);
    x ^= index + 0x9e3779b97f4a7c15ULL;
    return splitmix64(x);
  }

 private:
  static uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static uint64_t splitmix64(uint64_t&& x) {
    uint64_t tmp = x;
    return splitmix64(tmp);
  }

  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<uint64_t, 4> state_{};
};

}  // namespace maner
