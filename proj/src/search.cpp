#include "pfscale/search.hpp"

#include "pfscale/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace pfscale {

void SearchConfig::validate() const {
  require(dt > 0.0 && t1 > 0.0, "SearchConfig: dt and t1 must be positive");
  require(initialTrials >= 2, "SearchConfig: need at least two initial trials");
  require(maxTrials >= initialTrials, "SearchConfig: maxTrials below initialTrials");
  require(maxParticles >= 1, "SearchConfig: maxParticles must be positive");
  require(margin >= 0.0, "SearchConfig: margin must be non-negative");
  require(collapseEss >= 1.0, "SearchConfig: collapse ESS threshold must be at least 1");
}

SizeSearchResult smallest_passing_size(const SizePredicate& predicate, Index maxParticles) {
  require(maxParticles >= 1, "smallest_passing_size: maxParticles must be positive");
  SizeSearchResult result;
  std::map<Index, SizeEvaluation> seen;
  auto evaluate = [&](Index n) -> const SizeEvaluation& {
    auto it = seen.find(n);
    if (it != seen.end()) return it->second;
    SizeEvaluation e = predicate(n);
    e.particles = n;
    result.evaluations.push_back(e);
    return seen.emplace(n, e).first->second;
  };

  Index failing = 0;
  Index passing = 0;
  for (Index n = 1;; n = std::min(2 * n, maxParticles)) {
    if (evaluate(n).passed) {
      passing = n;
      break;
    }
    failing = n;
    if (n == maxParticles) {
      result.trialsUsed = seen.at(n).trials;
      return result;
    }
  }
  while (passing - failing > 1) {
    const Index mid = failing + (passing - failing) / 2;
    if (evaluate(mid).passed) {
      passing = mid;
    } else {
      failing = mid;
    }
  }
  result.particles = passing;
  result.trialsUsed = seen.at(passing).trials;
  return result;
}

namespace {

struct TrialSummary {
  double estimate;
  double standardError;
  int diverged;
  int censored;
};

// Sequential decision at one N: start with initialTrials and double the count
// while the estimate sits within `margin` standard errors of the threshold.
template <class Summarize>
SizeEvaluation decide(const SearchConfig& config, double threshold, bool passWhenBelow,
                      Summarize summarize) {
  SizeEvaluation out;
  for (int trials = config.initialTrials;; trials = std::min(2 * trials, config.maxTrials)) {
    const TrialSummary s = summarize(trials);
    out.trials = trials;
    out.estimate = s.estimate;
    out.standardError = s.standardError;
    out.diverged = s.diverged;
    out.censored = s.censored;
    const bool below = s.estimate <= threshold;
    out.passed = passWhenBelow ? below : s.estimate >= threshold;
    const bool clear = s.diverged > 0 || std::abs(s.estimate - threshold) > config.margin * s.standardError;
    if (clear) return out;
    if (trials == config.maxTrials) {
      out.resolved = false;
      return out;
    }
  }
}

TrialSpec base_spec(const SearchConfig& config, Index dim, Index particles) {
  TrialSpec spec;
  spec.model = LinearGaussianBenchmark{dim, config.coeffs};
  spec.dt = config.dt;
  spec.numSteps = TimeGrid::from_horizon(config.dt, config.t1).numSteps;
  spec.particles = particles;
  spec.recordSeries = false;
  return spec;
}

// Runs only the trials not already in `results`.
void extend(std::vector<TrialResult>& results, int trials, FilterKind kind,
            const TrialFactory& factory, int workers) {
  const int have = static_cast<int>(results.size());
  if (trials <= have) return;
  auto more = run_trial_batch(kind, factory, have, trials - have, workers);
  for (auto& r : more) results.push_back(std::move(r));
}

}  // namespace

SizeSearchResult required_ensemble_size(FilterKind kind, Index dim, double epsilon,
                                        const SearchConfig& config) {
  config.validate();
  require(dim >= 1, "required_ensemble_size: dimension must be positive");
  require(kind != FilterKind::Kalman, "required_ensemble_size: needs a particle filter");
  SizeSearchResult trivial;
  if (epsilon <= 0.5) return trivial;
  if (epsilon >= 2.0) {
    trivial.particles = 1;
    return trivial;
  }

  auto predicate = [&](Index n) {
    std::vector<TrialResult> results;
    return decide(config, epsilon, true, [&](int trials) {
      extend(results, trials, kind, [&](int trial) {
        TrialSpec spec = base_spec(config, dim, n);
        spec.truthSeed = truth_seed(config.masterSeed, dim, trial);
        spec.filterSeed = filter_seed(config.masterSeed, kind, dim, n, trial);
        spec.policy = kind == FilterKind::Bpf ? config.bpfPolicy : ResamplingPolicy::never();
        return spec;
      }, config.workers);
      std::vector<double> values;
      int diverged = 0;
      for (const auto& r : results) {
        if (r.status == TrialResult::Status::Diverged) {
          ++diverged;
        } else {
          values.push_back(r.timeAvgMse);
        }
      }
      if (diverged > 0) return TrialSummary{std::numeric_limits<double>::infinity(), 0.0, diverged, 0};
      const auto [mean, se] = mean_and_standard_error(values);
      return TrialSummary{mean, se, 0, 0};
    });
  };
  return smallest_passing_size(predicate, config.maxParticles);
}

SizeSearchResult collapse_ensemble_size(Index dim, double targetTime, const SearchConfig& config) {
  config.validate();
  require(dim >= 1, "collapse_ensemble_size: dimension must be positive");
  require(targetTime > 0.0 && targetTime < config.t1,
          "collapse_ensemble_size: target time must lie inside (0, t1)");

  auto predicate = [&](Index n) {
    std::vector<TrialResult> results;
    return decide(config, targetTime, false, [&](int trials) {
      extend(results, trials, FilterKind::Bpf, [&](int trial) {
        TrialSpec spec = base_spec(config, dim, n);
        spec.truthSeed = truth_seed(config.masterSeed, dim, trial);
        spec.filterSeed = filter_seed(config.masterSeed, FilterKind::Bpf, dim, n, trial);
        spec.policy = ResamplingPolicy::never();
        spec.stopAtEss = config.collapseEss;
        return spec;
      }, config.workers);
      std::vector<double> values;
      int diverged = 0;
      int censored = 0;
      for (const auto& r : results) {
        if (r.status == TrialResult::Status::Diverged) {
          ++diverged;
        } else if (r.firstPassage) {
          values.push_back(*r.firstPassage);
        } else {
          ++censored;
          values.push_back(config.t1);
        }
      }
      if (diverged > 0) return TrialSummary{0.0, 0.0, diverged, censored};
      const auto [mean, se] = mean_and_standard_error(values);
      return TrialSummary{mean, se, 0, censored};
    });
  };
  return smallest_passing_size(predicate, config.maxParticles);
}

}  // namespace pfscale
