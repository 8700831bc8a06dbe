#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace bioage {

// SplitMix64 finalizer. Bijective on 64-bit words with full avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a over the bytes, then mixed.
constexpr std::uint64_t hash_name(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

constexpr std::uint64_t combine_keys(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

// Key for a named substream of a top-level seed, e.g. ("goss"), ("synth", id, column).
constexpr std::uint64_t stream_key(std::uint64_t seed, std::string_view a) noexcept {
  return combine_keys(mix64(seed), hash_name(a));
}
constexpr std::uint64_t stream_key(std::uint64_t seed, std::string_view a, std::string_view b) noexcept {
  return combine_keys(stream_key(seed, a), hash_name(b));
}
constexpr std::uint64_t stream_key(std::uint64_t seed, std::string_view a, std::string_view b,
                                   std::string_view c) noexcept {
  return combine_keys(stream_key(seed, a, b), hash_name(c));
}
constexpr std::uint64_t stream_key(std::uint64_t seed, std::string_view a, std::uint64_t index) noexcept {
  return combine_keys(stream_key(seed, a), mix64(index));
}

/// Counter-based generator: draw n of a stream is mix64(key + n * golden_gamma).
///
/// The state is just (key, counter), so any (seed, participant, column)
/// triple maps to an independent stream whose output never depends on the
/// order in which other streams were consumed. Satisfies
/// std::uniform_random_bit_generator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // Box-Muller; consumes two draws per call so stream positions stay simple.
  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t bounded(std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    const std::uint64_t threshold = (0 - n) % n;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x < threshold);
    return x % n;
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace bioage
