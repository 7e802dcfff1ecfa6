#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace jumpcons {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// xoshiro256++ with splitmix64 seeding. Cheap to construct, which matters
/// because every simulated replicate owns its own streams.
class Engine {
 public:
  using result_type = std::uint64_t;

  explicit Engine(std::uint64_t seed = 0) noexcept {
    for (auto& s : state_) {
      seed += 0x9e3779b97f4a7c15ULL;
      s = splitmix64(seed - 0x9e3779b97f4a7c15ULL);
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
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

  friend bool operator==(const Engine&, const Engine&) = default;

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
};

/// Derives a child seed from a parent seed and a path of stream indices.
/// Streams are a pure function of (seed, path), independent of scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t id : path) {
    h = splitmix64(h ^ splitmix64(id + 0x632be59bd9b4e019ULL));
  }
  return h;
}

inline Engine make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  return Engine(derive_seed(seed, path));
}

}  // namespace jumpcons
