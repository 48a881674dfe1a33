#pragma once

#include "pfscale/core.hpp"

#include <cstdint>
#include <limits>

namespace pfscale {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Identifies one reproducible noise stream.
///
/// Streams form a tree: `child(i)` derives an independent stream from this one
/// by hashing the index into the stream id. The filters key one child per
/// time step and, below that, one child per particle slot, so the noise seen
/// by particle i at step k is fixed no matter how the loop over particles is
/// scheduled.
struct SeedSpec {
  std::uint64_t master = 0;
  std::uint64_t stream = 0;

  constexpr SeedSpec child(std::uint64_t index) const noexcept {
    return {master, mix64(stream ^ mix64(index + 0x632be59bd9b4e019ULL))};
  }

  constexpr std::uint64_t key() const noexcept {
    return mix64(master ^ mix64(stream + 0x9e3779b97f4a7c15ULL));
  }

  friend constexpr bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

/// Counter-based SplitMix64: output k is mix64(key + k * gamma). Satisfies
/// UniformRandomBitGenerator so it can drive the <random> distributions.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterEngine(std::uint64_t key) noexcept : key_(key) {}
  explicit constexpr CounterEngine(const SeedSpec& seed) noexcept : key_(seed.key()) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// `dim` i.i.d. standard normals from the stream `seed`.
Vector standard_normals(const SeedSpec& seed, Index dim);

/// D x N standard normals; column j comes from `seed.child(j)`.
Matrix particle_normals(const SeedSpec& seed, Index dim, Index n, Exec exec = Exec::Parallel);

/// Uniform on [0, 1) from the stream `seed`, `count` values.
Vector uniforms(const SeedSpec& seed, Index count);

}  // namespace pfscale
