#include "pfscale/trial.hpp"

#include "pfscale/fpf.hpp"
#include "pfscale/kalman.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <utility>

namespace pfscale {

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::Bpf: return "bpf";
    case FilterKind::Fpf: return "fpf";
    case FilterKind::Kalman: return "kalman";
  }
  return "bpf";
}

FilterKind parse_filter_kind(const std::string& text) {
  if (text == "bpf") return FilterKind::Bpf;
  if (text == "fpf") return FilterKind::Fpf;
  if (text == "kalman") return FilterKind::Kalman;
  throw InvalidInput("unknown filter kind '" + text + "'");
}

std::string to_string(TrialResult::Status status) {
  return status == TrialResult::Status::Ok ? "ok" : "diverged";
}

SeedSpec truth_seed(std::uint64_t master, Index dim, int trial) {
  return SeedSpec{master, 0}.child(1).child(static_cast<std::uint64_t>(dim)).child(
      static_cast<std::uint64_t>(trial));
}

SeedSpec filter_seed(std::uint64_t master, FilterKind kind, Index dim, Index particles,
                     int trial) {
  return SeedSpec{master, 0}
      .child(2)
      .child(static_cast<std::uint64_t>(kind))
      .child(static_cast<std::uint64_t>(dim))
      .child(static_cast<std::uint64_t>(particles))
      .child(static_cast<std::uint64_t>(trial));
}

Vector truth_initial_state(const TrialSpec& spec) {
  return prior_sample(spec.model, 1, spec.truthSeed.child(0)).col(0);
}

namespace {

using Clock = std::chrono::steady_clock;

// Accumulates one scalar trajectory, optionally keeping every point.
class Track {
 public:
  Track(SeriesRecord& series, bool keep) : series_(series), keep_(keep) {}

  void add(double t, double value) {
    sum_ += value;
    ++count_;
    if (keep_) {
      series_.times.push_back(t);
      series_.values.push_back(value);
    }
  }

  double average() const {
    return count_ == 0 ? std::numeric_limits<double>::quiet_NaN() : sum_ / static_cast<double>(count_);
  }
  std::size_t count() const noexcept { return count_; }

 private:
  SeriesRecord& series_;
  bool keep_;
  double sum_ = 0.0;
  std::size_t count_ = 0;
};

void validate(const TrialSpec& spec) {
  require(spec.dt > 0.0, "trial: dt must be positive");
  require(spec.numSteps >= 1, "trial: need at least one step");
  require(spec.particles >= 1, "trial: need at least one particle");
}

void finish(TrialResult& result, const TrialSpec& spec, const Track& mse) {
  result.stepsCompleted = mse.count();
  result.timeAvgMse = result.status == TrialResult::Status::Ok
                          ? mse.average()
                          : std::numeric_limits<double>::infinity();
  const auto close = [&](SeriesRecord& s) {
    if (!s.times.empty()) s.endTime = s.times.back() + spec.dt;
  };
  close(result.mse);
  close(result.ess);
  close(result.gain);
  close(result.spread);
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

TrialResult run_bpf_trial(const TrialSpec& spec) {
  validate(spec);
  TrialResult result;
  result.filter = FilterKind::Bpf;
  const DiffusionModel model = spec.model.model();
  TruthStream truth(model, spec.dt, truth_initial_state(spec), spec.truthSeed.child(1));
  WeightedEnsemble ensemble = bpf_init(spec.model, spec.particles, spec.filterSeed.child(0));
  Track mse(result.mse, spec.recordSeries);
  Track ess(result.ess, spec.recordSeries);
  double lastResample = 0.0;

  std::size_t k = 0;
  try {
    for (; k < spec.numSteps; ++k) {
      const auto start = Clock::now();
      const double t = spec.dt * static_cast<double>(k);
      const double mseNow = mse_instant(truth.state(), weighted_mean(ensemble));
      const double essNow = effective_sample_size(ensemble);
      if (k == 0) result.initialMse = mseNow;
      mse.add(t, mseNow);
      ess.add(t, essNow);
      if (spec.stopAtEss && essNow <= *spec.stopAtEss) {
        result.firstPassage = t;
        break;
      }

      const Vector& dY = truth.advance();
      ensemble = bpf_reweight(std::move(ensemble), model, dY, spec.dt, spec.exec);
      const SeedSpec stepSeed = spec.filterSeed.child(k + 1);
      ensemble = bpf_propagate(std::move(ensemble), model, spec.dt, stepSeed.child(0), spec.exec);
      const double tNext = spec.dt * static_cast<double>(k + 1);
      ResampleOutcome outcome = apply_resampling_policy(std::move(ensemble), spec.policy, tNext,
                                                        lastResample, stepSeed.child(1));
      ensemble = std::move(outcome.ensemble);
      if (outcome.resampled) {
        lastResample = tNext;
        result.resampleTimes.push_back(tNext);
      }
      if (spec.timeSteps) result.stepSeconds.push_back(seconds_since(start));
    }
  } catch (const DivergenceError&) {
    result.status = TrialResult::Status::Diverged;
    result.divergenceStep = k;
  }
  finish(result, spec, mse);
  return result;
}

TrialResult run_fpf_trial(const TrialSpec& spec) {
  validate(spec);
  TrialResult result;
  result.filter = FilterKind::Fpf;
  const DiffusionModel model = spec.model.model();
  TruthStream truth(model, spec.dt, truth_initial_state(spec), spec.truthSeed.child(1));
  UnweightedEnsemble ensemble = fpf_init(spec.model, spec.particles, spec.filterSeed.child(0));
  Track mse(result.mse, spec.recordSeries);
  Track gain(result.gain, spec.recordSeries);
  Track spread(result.spread, spec.recordSeries);
  const double d = static_cast<double>(spec.model.dim);
  const double n = static_cast<double>(spec.particles);

  std::size_t k = 0;
  try {
    for (; k < spec.numSteps; ++k) {
      const auto start = Clock::now();
      const double t = spec.dt * static_cast<double>(k);
      const Matrix& z = ensemble.positions();
      const Vector mean = unweighted_mean(ensemble);
      const double mseNow = mse_instant(truth.state(), mean);
      if (k == 0) result.initialMse = mseNow;
      mse.add(t, mseNow);
      // trace(K) = (1/N) sum_k sum_i (h_i(Z_k) - hbar_i) Z_ki; for h = c z this
      // is c times the summed sample variance.
      const Matrix centered = z.colwise() - mean;
      const double variance = centered.squaredNorm() / (n * d);
      spread.add(t, variance);
      gain.add(t, spec.model.coeffs.observation * variance);

      const Vector& dY = truth.advance();
      const SeedSpec stepSeed = spec.filterSeed.child(k + 1);
      ensemble = fpf_step(std::move(ensemble), model, dY, spec.dt, stepSeed.child(0), spec.exec);
      if (spec.timeSteps) result.stepSeconds.push_back(seconds_since(start));
    }
  } catch (const DivergenceError&) {
    result.status = TrialResult::Status::Diverged;
    result.divergenceStep = k;
  }
  result.timeAvgGain = gain.average();
  result.timeAvgSpread = spread.average();
  finish(result, spec, mse);
  return result;
}

TrialResult run_kalman_trial(const TrialSpec& spec) {
  validate(spec);
  TrialResult result;
  result.filter = FilterKind::Kalman;
  const DiffusionModel model = spec.model.model();
  TruthStream truth(model, spec.dt, truth_initial_state(spec), spec.truthSeed.child(1));
  KalmanState state = kalman_init(spec.model);
  Track mse(result.mse, spec.recordSeries);
  Track gain(result.gain, spec.recordSeries);

  std::size_t k = 0;
  try {
    for (; k < spec.numSteps; ++k) {
      const double t = spec.dt * static_cast<double>(k);
      const double mseNow = mse_instant(truth.state(), state.mean);
      if (k == 0) result.initialMse = mseNow;
      mse.add(t, mseNow);
      gain.add(t, spec.model.coeffs.observation * state.variance);
      const Vector& dY = truth.advance();
      state = kalman_step(state, dY, spec.dt, spec.model.coeffs);
    }
  } catch (const DivergenceError&) {
    result.status = TrialResult::Status::Diverged;
    result.divergenceStep = k;
  }
  result.timeAvgGain = gain.average();
  finish(result, spec, mse);
  return result;
}

TrialResult run_trial(FilterKind kind, const TrialSpec& spec) {
  switch (kind) {
    case FilterKind::Bpf: return run_bpf_trial(spec);
    case FilterKind::Fpf: return run_fpf_trial(spec);
    case FilterKind::Kalman: return run_kalman_trial(spec);
  }
  return run_bpf_trial(spec);
}

int resolve_workers(int workers) {
  return workers > 0 ? workers : omp_get_max_threads();
}

std::vector<TrialResult> run_trial_batch(FilterKind kind, const TrialFactory& factory, int first,
                                         int count, int workers) {
  require(count >= 0, "run_trial_batch: negative trial count");
  std::vector<TrialResult> results(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(results.size());
  const int threads = std::min(resolve_workers(workers), std::max(count, 1));
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (int i = 0; i < count; ++i) {
    try {
      TrialSpec spec = factory(first + i);
      if (threads > 1) spec.exec = Exec::Serial;
      results[static_cast<std::size_t>(i)] = run_trial(kind, spec);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace pfscale
