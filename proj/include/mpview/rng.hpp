#pragma once

#include <array>
#include <cstdint>

namespace mpview {

// xoshiro256** with splitmix64 seeding. The four-word state is plain data,
// so checkpoints can serialize it and resume a run bit-for-bit. All
// stochastic code in this project draws from this generator, never from
// std:: distributions (their output is implementation-defined).
class Rng {
 public:
  Rng() : Rng(0) {}

  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& w : state_) {
      // splitmix64
      x += 0x9e3779b97f4a7c15ULL;
      uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      w = z ^ (z >> 31);
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

  // Uniform double in [0, 1), 53 mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection-free modulo bias is irrelevant at
  // the ranges used here (n far below 2^32), but keep it unbiased anyway.
  uint64_t uniform_index(uint64_t n) {
    const uint64_t threshold = (0 - n) % n;
    for (;;) {
      const uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Derive an independent stream; used to give parallel trials their own
  // deterministic generator regardless of scheduling.
  Rng fork(uint64_t stream) {
    Rng r;
    r.state_ = state_;
    Rng mix(stream ^ 0xa0761d6478bd642fULL);
    for (int i = 0; i < 4; ++i) r.state_[i] ^= mix.next_u64();
    for (int i = 0; i < 4; ++i) r.next_u64();
    return r;
  }

  std::array<uint64_t, 4> state() const { return state_; }
  void set_state(const std::array<uint64_t, 4>& s) { state_ = s; }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::array<uint64_t, 4> state_{};
};

}  // namespace mpview
