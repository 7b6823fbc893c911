#pragma once

#include <cstdint>
#include <random>

namespace stg {

/// Counter-addressed random stream.
///
/// Every stream is identified by (seed, domain, index, counter) and is backed
/// by a std::mt19937_64 seeded through std::seed_seq from those four words.
/// Callers never carry generator state across calls: the Langevin sampler
/// uses (chain index, global step) as (index, counter), so any chain can be
/// advanced in any order or on any thread and still draw the same numbers,
/// and a checkpoint only has to record step counters.
///
/// Normal variates use the Box-Muller transform on 53-bit uniforms so the
/// sequence does not depend on the standard library's distribution classes.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t domain, std::uint64_t index,
      std::uint64_t counter);
  explicit Rng(std::uint64_t seed) : Rng(seed, 0, 0, 0) {}

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open_low();
  /// Standard normal.
  double normal();
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Domains keep independent consumers of one master seed apart.
namespace rng_domain {
inline constexpr std::uint64_t kTensor = 0;
inline constexpr std::uint64_t kParams = 1;
inline constexpr std::uint64_t kReference = 2;
inline constexpr std::uint64_t kChain = 3;
inline constexpr std::uint64_t kRecovery = 4;
inline constexpr std::uint64_t kMask = 5;
}  // namespace rng_domain

}  // namespace stg
