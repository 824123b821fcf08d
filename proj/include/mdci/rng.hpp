#pragma once

// Seeded, counter-splittable random streams. The generator is xoshiro256++
// seeded through splitmix64 from (seed, stream_id), so identical keys give
// bitwise-identical sequences and distinct stream ids give independent
// streams regardless of thread scheduling.

#include <cstdint>
#include <cmath>

#include "mdci/linalg.hpp"

namespace mdci {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (0x9E3779B97F4A7C15ULL + (b << 6) + (b >> 2));
  std::uint64_t r = splitmix64(s);
  s ^= b;
  return r ^ splitmix64(s);
}

}  // namespace detail

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id) {
    std::uint64_t sm = detail::mix_key(seed, stream_id);
    for (auto& w : s_) w = detail::splitmix64(sm);
    have_spare_ = false;
    spare_ = 0.0;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Counter-split: child streams are keyed by (seed, hash(stream_id, i)).
  RngStream substream(std::uint64_t i) const {
    return RngStream(seed_, detail::mix_key(stream_id_, i + 1));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Vec normal_vec(int d) {
    Vec z(d);
    for (int i = 0; i < d; ++i) z[i] = normal();
    return z;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t seed_, stream_id_;
  std::uint64_t s_[4];
  bool have_spare_;
  double spare_;
};

}  // namespace mdci
