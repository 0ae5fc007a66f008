#pragma once

#include <cmath>
#include <cstdint>

namespace metagrid {

// Counter-based generator built on SplitMix64. A stream is identified by a
// 64-bit key; successive samples hash (key, counter). Streams derived with
// split() are independent of scheduling order, and the full state is two
// integers, which keeps checkpointing trivial.
class Rng {
 public:
  Rng() : key_(0), counter_(0) {}
  explicit Rng(uint64_t key) : key_(key), counter_(0) {}
  Rng(uint64_t key, uint64_t counter) : key_(key), counter_(counter) {}

  static uint64_t mix(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  uint64_t next_u64() { return mix(key_ ^ mix(counter_++)); }

  // Derive an independent stream; deterministic in (key, id).
  Rng split(uint64_t id) const { return Rng(mix(key_ ^ mix(id ^ 0xd1b54a32d192ed03ULL))); }

  double uniform() {  // [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    double u1 = uniform(), u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Sample an index from unnormalized nonnegative weights.
  template <class Vec>
  int categorical(const Vec& w) {
    double total = 0;
    for (double x : w) total += x;
    double u = uniform() * total;
    double acc = 0;
    int n = static_cast<int>(w.size());
    for (int i = 0; i < n; ++i) {
      acc += w[i];
      if (u < acc) return i;
    }
    return n - 1;
  }

  uint64_t key() const { return key_; }
  uint64_t counter() const { return counter_; }
  void set_state(uint64_t key, uint64_t counter) { key_ = key; counter_ = counter; }

 private:
  uint64_t key_;
  uint64_t counter_;
};

}  // namespace metagrid
