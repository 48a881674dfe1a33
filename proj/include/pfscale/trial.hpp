#pragma once

#include "pfscale/bpf.hpp"
#include "pfscale/core.hpp"
#include "pfscale/metrics.hpp"
#include "pfscale/model.hpp"
#include "pfscale/rng.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pfscale {

enum class FilterKind { Bpf, Fpf, Kalman };

std::string to_string(FilterKind kind);
FilterKind parse_filter_kind(const std::string& text);

/// One filter run against one truth path on the linear benchmark.
///
/// Seeds: the truth path depends only on `truthSeed`, so filters of any kind
/// and size given the same truth seed see the same hidden state and
/// observations. Within a filter, the initial ensemble uses
/// filterSeed.child(0); step k propagates with filterSeed.child(k + 1).child(0)
/// and resamples with filterSeed.child(k + 1).child(1).
struct TrialSpec {
  LinearGaussianBenchmark model;
  double dt = 0.01;
  std::size_t numSteps = 1;
  Index particles = 1;
  SeedSpec truthSeed;
  SeedSpec filterSeed;
  ResamplingPolicy policy = ResamplingPolicy::never();
  /// Keep per-step MSE/ESS series (otherwise only running sums).
  bool recordSeries = true;
  /// Stop as soon as the ESS is at or below this value (BPF only).
  std::optional<double> stopAtEss;
  /// Record wall-clock seconds per step.
  bool timeSteps = false;
  Exec exec = Exec::Parallel;
};

struct TrialResult {
  enum class Status { Ok, Diverged };

  FilterKind filter = FilterKind::Bpf;
  Status status = Status::Ok;
  std::optional<std::size_t> divergenceStep;
  std::size_t stepsCompleted = 0;

  /// Left Riemann average of the MSE over completed steps; +inf if diverged.
  double timeAvgMse = 0.0;
  /// MSE before the first step (t = 0).
  double initialMse = 0.0;

  SeriesRecord mse;
  SeriesRecord ess;     // BPF
  SeriesRecord gain;    // FPF: trace(K) / D
  SeriesRecord spread;  // FPF: mean per-coordinate ensemble variance
  double timeAvgGain = 0.0;
  double timeAvgSpread = 0.0;

  std::optional<double> firstPassage;  // with stopAtEss
  std::vector<double> resampleTimes;
  std::vector<double> stepSeconds;
};

std::string to_string(TrialResult::Status status);

/// X_0 drawn from the stationary prior with truthSeed.child(0).
Vector truth_initial_state(const TrialSpec& spec);

TrialResult run_trial(FilterKind kind, const TrialSpec& spec);

TrialResult run_bpf_trial(const TrialSpec& spec);
TrialResult run_fpf_trial(const TrialSpec& spec);
/// Exact Kalman-Bucy filter on the same truth; `particles` is ignored.
TrialResult run_kalman_trial(const TrialSpec& spec);

using TrialFactory = std::function<TrialSpec(int trial)>;

/// Runs trials first, ..., first + count - 1 across `workers` OpenMP threads
/// (0 = runtime default). With more than one thread each trial runs its
/// kernels serially. Particle noise is keyed by index, so the output does not
/// depend on the worker count. Results are in trial order.
std::vector<TrialResult> run_trial_batch(FilterKind kind, const TrialFactory& factory, int first,
                                         int count, int workers);

int resolve_workers(int workers);

/// Seed tree used by the experiment harness and the size searches.
SeedSpec truth_seed(std::uint64_t master, Index dim, int trial);
SeedSpec filter_seed(std::uint64_t master, FilterKind kind, Index dim, Index particles, int trial);

}  // namespace pfscale
