#pragma once
// Deterministic RNG used everywhere in the project. The core is splitmix64;
// bounded and real draws are hand-rolled so that streams are bit-identical
// across platforms and standard-library versions.

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace binpack {

inline uint64_t splitmix64_mix(uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : state_(seed) {}

  // Independent stream for (seed, stream_id); used for per-instance and
  // per-purpose streams so draws in one place never shift another.
  static Rng stream(uint64_t seed, uint64_t stream_id) {
    uint64_t a = splitmix64_mix(seed + 0x9E3779B97F4A7C15ull);
    uint64_t b = splitmix64_mix(stream_id * 0x9E3779B97F4A7C15ull + 0xD1B54A32D192ED03ull);
    return Rng(splitmix64_mix(a ^ b));
  }

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return splitmix64_mix(state_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in {0, ..., n-1}, rejection-debiased.
  uint64_t below(uint64_t n) {
    if (n == 0) throw std::domain_error("Rng::below(0)");
    uint64_t threshold = (0ull - n) % n;
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform integer in [lo, hi] inclusive.
  long long uniform_int(long long lo, long long hi) {
    if (hi < lo) throw std::domain_error("Rng::uniform_int: empty range");
    return lo + (long long)below((uint64_t)(hi - lo) + 1);
  }

  double uniform_real(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Index sampled proportionally to non-negative weights (fixed scan order).
  size_t discrete(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw std::domain_error("Rng::discrete: negative weight");
      total += w;
    }
    if (total <= 0.0) throw std::domain_error("Rng::discrete: zero total weight");
    double u = next_double() * total;
    double acc = 0.0;
    size_t last_positive = 0;
    for (size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] > 0.0) last_positive = i;
      acc += weights[i];
      if (u < acc && weights[i] > 0.0) return i;
    }
    return last_positive;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = (size_t)below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  uint64_t state() const { return state_; }
  void set_state(uint64_t s) { state_ = s; }

 private:
  uint64_t state_;
};

}  // namespace binpack
