#pragma once

#include "pfscale/bpf.hpp"
#include "pfscale/core.hpp"
#include "pfscale/trial.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace pfscale {

/// Knobs of the ensemble-size searches. Trials at one N share truth seeds
/// with every other N (common random numbers), so the predicate varies with N
/// for the filter's sake only.
struct SearchConfig {
  double t1 = 500.0;
  double dt = 0.01;
  int initialTrials = 4;
  int maxTrials = 32;
  Index maxParticles = 4096;
  /// Decide only once |estimate - threshold| exceeds this many standard errors.
  double margin = 2.0;
  ResamplingPolicy bpfPolicy = ResamplingPolicy::ess_threshold(0.1);
  /// ESS threshold n for the collapse-time predicate.
  double collapseEss = 10.0;
  LinearIsotropic coeffs{};
  std::uint64_t masterSeed = 0;
  int workers = 0;

  void validate() const;
};

/// Result of evaluating the predicate at one N.
struct SizeEvaluation {
  Index particles = 0;
  double estimate = 0.0;
  double standardError = 0.0;
  int trials = 0;
  int diverged = 0;
  int censored = 0;
  bool passed = false;
  /// False when the trial cap was hit before the margin was cleared; the
  /// decision then falls back to the point estimate.
  bool resolved = true;
};

struct SizeSearchResult {
  /// Smallest passing N, or nullopt when nothing up to the cap passes.
  std::optional<Index> particles;
  /// Trials behind the decision at the returned N (at the cap if unreachable).
  int trialsUsed = 0;
  std::vector<SizeEvaluation> evaluations;  // in evaluation order

  bool reachable() const noexcept { return particles.has_value(); }
};

using SizePredicate = std::function<SizeEvaluation(Index particles)>;

/// Doubling from N = 1 until the predicate passes, then bisection between the
/// last failure and the first success. Assumes the predicate is monotone in N.
SizeSearchResult smallest_passing_size(const SizePredicate& predicate, Index maxParticles);

/// N_eps(D): smallest N whose trial-mean time-averaged MSE over [0, t1] is at
/// most eps. eps >= 2 gives 1 and eps <= 0.5 is unreachable without running
/// anything.
SizeSearchResult required_ensemble_size(FilterKind kind, Index dim, double epsilon,
                                        const SearchConfig& config);

/// Smallest BPF ensemble whose trial-mean first-passage time to
/// ESS <= config.collapseEss is at least `targetTime`. Trials that never
/// cross within t1 enter the mean as t1.
SizeSearchResult collapse_ensemble_size(Index dim, double targetTime, const SearchConfig& config);

}  // namespace pfscale
