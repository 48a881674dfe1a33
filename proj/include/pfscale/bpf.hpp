#pragma once

#include "pfscale/core.hpp"
#include "pfscale/model.hpp"
#include "pfscale/rng.hpp"

#include <functional>
#include <string>
#include <vector>

namespace pfscale {

/// N particles in R^D with log-domain importance weights.
///
/// Log weights are stored up to a shared constant: every mutation shifts them
/// so the largest is 0, then recomputes the normalized weights. Unnormalized
/// weights in high D span hundreds of e-folds and would overflow otherwise.
class WeightedEnsemble {
 public:
  /// Uniform weights 1/N.
  explicit WeightedEnsemble(Matrix positions);
  WeightedEnsemble(Matrix positions, Vector logWeights);

  Index size() const noexcept { return positions_.cols(); }
  Index dim() const noexcept { return positions_.rows(); }

  const Matrix& positions() const noexcept { return positions_; }
  const Vector& log_weights() const noexcept { return logWeights_; }
  const Vector& weights() const noexcept { return weights_; }

  Matrix& mutable_positions() noexcept { return positions_; }

  /// logWeights += increments, then renormalize. Throws DivergenceError if
  /// any increment is non-finite.
  void add_log_weights(const Vector& increments);
  void reset_uniform();

 private:
  void renormalize();

  Matrix positions_;
  Vector logWeights_;
  Vector weights_;
};

/// When to resample. `value` is the ESS fraction n_crit/N for EssThreshold
/// and the period in time units for FixedInterval.
struct ResamplingPolicy {
  enum class Kind { Never, EssThreshold, FixedInterval };

  Kind kind = Kind::Never;
  double value = 0.0;

  static ResamplingPolicy never() { return {Kind::Never, 0.0}; }
  static ResamplingPolicy ess_threshold(double fraction);
  static ResamplingPolicy fixed_interval(double period);

  /// "never", "ess:<fraction>" or "interval:<period>".
  std::string describe() const;
  static ResamplingPolicy parse(const std::string& text);
};

WeightedEnsemble bpf_init(const LinearGaussianBenchmark& model, Index n, const SeedSpec& seed);

/// Prior motion for every particle; weights untouched. Particle j draws its
/// noise from seed.child(j).
WeightedEnsemble bpf_propagate(WeightedEnsemble ensemble, const DiffusionModel& model, double dt,
                               const SeedSpec& seed, Exec exec = Exec::Parallel);
WeightedEnsemble bpf_propagate(WeightedEnsemble ensemble, const DiffusionModel& model, double dt,
                               const Matrix& noise, Exec exec = Exec::Parallel);

/// h(Z) . dY - 0.5 |h(Z)|^2 dt for every column: the exact log of the
/// stochastic exponential of dM = M h(Z) . dY with h frozen over the step.
Vector bpf_log_increments(const Matrix& positions, const DiffusionModel& model,
                          const Vector& obsIncrement, double dt, Exec exec = Exec::Parallel);

WeightedEnsemble bpf_reweight(WeightedEnsemble ensemble, const DiffusionModel& model,
                              const Vector& obsIncrement, double dt, Exec exec = Exec::Parallel);

/// 1 / sum(m_i^2).
double effective_sample_size(const Vector& weights);
inline double effective_sample_size(const WeightedEnsemble& ensemble) {
  return effective_sample_size(ensemble.weights());
}

/// N ancestor indices drawn with replacement by inverting the cumulative sum
/// with one uniform per draw.
std::vector<Index> multinomial_ancestors(const Vector& weights, const SeedSpec& seed);

/// Number of times each index appears in `ancestors`.
std::vector<Index> offspring_counts(const std::vector<Index>& ancestors, Index n);

WeightedEnsemble multinomial_resample(const WeightedEnsemble& ensemble, const SeedSpec& seed);

struct ResampleOutcome {
  WeightedEnsemble ensemble;
  bool resampled = false;
};

bool resampling_due(const WeightedEnsemble& ensemble, const ResamplingPolicy& policy, double t,
                    double lastResampleTime);

ResampleOutcome apply_resampling_policy(WeightedEnsemble ensemble, const ResamplingPolicy& policy,
                                        double t, double lastResampleTime, const SeedSpec& seed);

using Observable = std::function<Vector(const Vector&)>;

/// sum_i m_i phi(Z_i).
Vector weighted_estimate(const WeightedEnsemble& ensemble, const Observable& phi);

/// weighted_estimate with phi = identity.
inline Vector weighted_mean(const WeightedEnsemble& ensemble) {
  return ensemble.positions() * ensemble.weights();
}

}  // namespace pfscale
