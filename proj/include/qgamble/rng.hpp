// rng.hpp
// Reproducible random stream for gambling sessions.
//
// Algorithm (pinned, version 1): std::mt19937_64 seeded through
// std::seed_seq over the four 32-bit words {seed_lo, seed_hi, stream_lo,
// stream_hi}. Uniform reals take the top 53 bits of one 64-bit output,
// scaled by 2^-53. Both the engine and seed_seq are fully specified by the
// C++ standard, so streams are identical across platforms and toolchains;
// std::uniform_real_distribution is avoided because its output is not.

#pragma once

#include <cstdint>
#include <random>

namespace qgamble {

class Rng {
 public:
  static constexpr int kAlgorithmVersion = 1;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform draw in [0, 1).
  double uniform();

  /// Independent child generator; advances this generator by one draw.
  Rng split();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

}  // namespace qgamble
