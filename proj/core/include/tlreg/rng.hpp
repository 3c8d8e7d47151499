#pragma once

#include <array>
#include <cstdint>

namespace tlreg {

/// SplitMix64 finalizer; also used as the stream-derivation hash.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Order-dependent 64-bit combiner for deriving sub-stream ids.
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept;

/// Splittable counter-seeded generator (xoshiro256++ core).
///
/// A (seed, stream_id) pair identifies one logical stream: the same pair
/// reproduces the same sample sequence bit-for-bit on every run and under
/// any thread schedule, and distinct stream_ids give statistically
/// independent streams. Value type; never share one instance across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream_id = 0) noexcept;

  /// Derive an independent sub-stream of the same seed.
  Rng stream(std::uint64_t stream_id) const noexcept { return Rng(seed_, stream_id); }

  std::uint64_t next_u64() noexcept;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept;

  /// Standard normal draw (Marsaglia polar, one spare cached).
  double gaussian() noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

 private:
  std::array<std::uint64_t, 4> state_;
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace tlreg
