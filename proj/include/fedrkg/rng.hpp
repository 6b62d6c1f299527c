#pragma once

#include <cmath>
#include <cstdint>

namespace fedrkg {

// All randomness in a run derives from one master seed through keyed
// streams. A stream is identified by (purpose, actor, round), so the
// draw sequence seen by any piece of work is independent of how clients
// are scheduled across worker threads.
enum class Stream : std::uint64_t {
  global_init = 1,
  client_init = 2,
  participant_sampling = 3,
  training = 4,
  gate_training = 5,
  noise = 6,
  analysis = 7,
};

// xoshiro256++ with splitmix64 seeding. Self-contained so that the draw
// sequences are fixed by this source alone, not by the standard
// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = splitmix64(s);
  }

  static Rng stream(std::uint64_t master_seed, Stream purpose,
                    std::uint64_t actor, std::uint64_t round) {
    std::uint64_t s = master_seed;
    std::uint64_t key = splitmix64(s);
    s ^= static_cast<std::uint64_t>(purpose) * 0x9e3779b97f4a7c15ULL;
    key ^= splitmix64(s);
    s ^= actor + 0xbf58476d1ce4e5b9ULL;
    key ^= splitmix64(s);
    s ^= round + 0x94d049bb133111ebULL;
    key ^= splitmix64(s);
    return Rng(key);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound); unbiased via rejection.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t reject = (-bound) % bound;  // 2^64 mod bound
    std::uint64_t x = next();
    while (x < reject) x = next();
    return x % bound;
  }

  // Box-Muller; the paired deviate is cached.
  double normal(double mean, double stddev) {
    if (have_cached_) {
      have_cached_ = false;
      return mean + stddev * cached_;
    }
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    cached_ = radius * std::sin(angle);
    have_cached_ = true;
    return mean + stddev * radius * std::cos(angle);
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace fedrkg
