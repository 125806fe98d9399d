#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace rdn {

// Deterministic random stream. Distributions are implemented on top of the
// raw 64-bit output so that sequences are identical across standard library
// implementations; run-to-run reproducibility of every experiment depends on
// this.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(splitmix(seed ? seed : 0x9e3779b97f4a7c15ull)) {}

  uint64_t next_u64() {
    // xorshift128+ style step seeded via splitmix64.
    uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dull;
  }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (pairs cached).
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  int bit() { return static_cast<int>(next_u64() >> 63); }

  /// Integer in [0, n).
  uint64_t below(uint64_t n) {
    // Rejection-free modulo is biased for huge n; all our n are tiny.
    return next_u64() % n;
  }

  /// k distinct indices drawn uniformly from [0, n), ascending order.
  std::vector<int64_t> sample_without_replacement(int64_t n, int64_t k);

  /// Independent substream derived from this stream's seed and a label.
  /// Streams for distinct labels are decorrelated; derivation is pure so the
  /// parent stream is not advanced.
  Rng split(const std::string& label) const;
  Rng split(uint64_t salt) const;

  uint64_t seed_fingerprint() const { return state_; }

  static uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

 private:
  uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

inline std::vector<int64_t> Rng::sample_without_replacement(int64_t n, int64_t k) {
  if (k > n) k = n;
  // Floyd's algorithm; result sorted for deterministic downstream iteration.
  std::vector<int64_t> out;
  out.reserve(static_cast<size_t>(k));
  for (int64_t j = n - k; j < n; ++j) {
    int64_t t = static_cast<int64_t>(below(static_cast<uint64_t>(j + 1)));
    bool seen = false;
    for (int64_t v : out) {
      if (v == t) {
        seen = true;
        break;
      }
    }
    out.push_back(seen ? j : t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline Rng Rng::split(uint64_t salt) const {
  return Rng(splitmix(state_ ^ splitmix(salt)));
}

inline Rng Rng::split(const std::string& label) const {
  // FNV-1a over the label, mixed into the current state.
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return split(h);
}

}  // namespace rdn
