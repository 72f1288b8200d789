#ifndef MDPP_RANDOM_HPP
#define MDPP_RANDOM_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace mdpp {

/// splitmix64 finalizer over a pair of words.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

/// FNV-1a, used to derive per-strategy streams from names.
std::uint64_t stable_hash(std::string_view text) noexcept;

/// Seeded uniform stream. The same seed yields the same sequence on every
/// platform for a given build: uniforms are formed from the top 53 bits of
/// mt19937_64 output rather than through std::uniform_real_distribution.
class RandomSource {
public:
  explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer on [0, n), n > 0.
  std::size_t uniform_index(std::size_t n);

  std::uint64_t next_u64() { return engine_(); }

  /// Independent stream keyed by `key`; depends only on seed(), not on how
  /// much of this stream has been consumed.
  RandomSource substream(std::uint64_t key) const { return RandomSource(mix_seed(seed_, key)); }

  std::mt19937_64 &engine() { return engine_; }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace mdpp

#endif  // MDPP_RANDOM_HPP
