#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lineens {

/// Seeded random stream. Each (seed, stream index) pair yields an
/// independent, reproducible generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
    engine_.seed(seq);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    // 53 random bits, shifted by half an ulp so 0 is never returned.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_(engine_); }

  double exponential() { return -std::log(uniform()); }

  std::uint64_t next_u64() { return engine_(); }

  /// Derives a child stream; used to split work deterministically.
  Rng split(std::uint64_t index) { return Rng(engine_(), index); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace lineens
