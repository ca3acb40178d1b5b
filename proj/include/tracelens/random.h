// Seeded random source used by clustering, sampling and trace synthesis.
//
// Built on std::mt19937_64, whose output sequence is fixed by the standard.
// Uniform and normal variates are derived here rather than through the
// <random> distributions, whose algorithms are implementation defined, so a
// seed produces the same numbers on every platform.

#ifndef TRACELENS_RANDOM_H_
#define TRACELENS_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <random>

namespace tracelens {

// SplitMix64 finalizer. Used to derive independent child seeds.
std::uint64_t MixSeed(std::uint64_t a, std::uint64_t b);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). n must be positive.
  std::size_t UniformIndex(std::size_t n);

  // Standard normal via the Box-Muller transform.
  double Normal();

  // Independent generator for sub-stream `stream`; does not advance *this.
  Rng Fork(std::uint64_t stream) const { return Rng(MixSeed(seed_, stream)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tracelens

#endif  // TRACELENS_RANDOM_H_
