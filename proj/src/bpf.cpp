#include "pfscale/bpf.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <utility>

namespace pfscale {

WeightedEnsemble::WeightedEnsemble(Matrix positions)
    : WeightedEnsemble(std::move(positions), Vector()) {}

WeightedEnsemble::WeightedEnsemble(Matrix positions, Vector logWeights)
    : positions_(std::move(positions)), logWeights_(std::move(logWeights)) {
  require(positions_.cols() >= 1, "WeightedEnsemble: need at least one particle");
  require(positions_.rows() >= 1, "WeightedEnsemble: need positive dimension");
  if (logWeights_.size() == 0) logWeights_ = Vector::Zero(positions_.cols());
  require(logWeights_.size() == positions_.cols(), "WeightedEnsemble: one log weight per particle");
  require(logWeights_.allFinite(), "WeightedEnsemble: log weights must be finite");
  renormalize();
}

void WeightedEnsemble::add_log_weights(const Vector& increments) {
  require(increments.size() == logWeights_.size(), "add_log_weights: size mismatch");
  if (!increments.allFinite()) throw DivergenceError("non-finite log-weight increment");
  logWeights_ += increments;
  renormalize();
}

void WeightedEnsemble::reset_uniform() {
  logWeights_.setZero();
  renormalize();
}

void WeightedEnsemble::renormalize() {
  logWeights_.array() -= logWeights_.maxCoeff();
  weights_ = logWeights_.array().exp();
  weights_ /= weights_.sum();
}

ResamplingPolicy ResamplingPolicy::ess_threshold(double fraction) {
  require(fraction > 0.0 && fraction <= 1.0, "ResamplingPolicy: ESS fraction must be in (0, 1]");
  return {Kind::EssThreshold, fraction};
}

ResamplingPolicy ResamplingPolicy::fixed_interval(double period) {
  require(period > 0.0 && std::isfinite(period), "ResamplingPolicy: period must be positive");
  return {Kind::FixedInterval, period};
}

std::string ResamplingPolicy::describe() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::Never: return "never";
    case Kind::EssThreshold: out << "ess:" << value; break;
    case Kind::FixedInterval: out << "interval:" << value; break;
  }
  return out.str();
}

ResamplingPolicy ResamplingPolicy::parse(const std::string& text) {
  if (text == "never") return never();
  const auto colon = text.find(':');
  require(colon != std::string::npos, "ResamplingPolicy: expected never, ess:<f> or interval:<p>");
  const std::string kind = text.substr(0, colon);
  const std::string number = text.substr(colon + 1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(number.data(), number.data() + number.size(), value);
  require(ec == std::errc() && end == number.data() + number.size() && !number.empty(),
          "ResamplingPolicy: malformed number");
  if (kind == "ess") return ess_threshold(value);
  if (kind == "interval") return fixed_interval(value);
  throw InvalidInput("ResamplingPolicy: unknown kind '" + kind + "'");
}

WeightedEnsemble bpf_init(const LinearGaussianBenchmark& model, Index n, const SeedSpec& seed) {
  require(n >= 1, "bpf_init: n must be at least 1");
  return WeightedEnsemble(prior_sample(model, n, seed));
}

WeightedEnsemble bpf_propagate(WeightedEnsemble ensemble, const DiffusionModel& model, double dt,
                               const SeedSpec& seed, Exec exec) {
  const Matrix noise = particle_normals(seed, ensemble.dim(), ensemble.size(), exec);
  return bpf_propagate(std::move(ensemble), model, dt, noise, exec);
}

WeightedEnsemble bpf_propagate(WeightedEnsemble ensemble, const DiffusionModel& model, double dt,
                               const Matrix& noise, Exec exec) {
  require(ensemble.dim() == model.dim(), "bpf_propagate: dimension mismatch");
  propagate_columns(ensemble.mutable_positions(), model, Matrix(), dt, noise, exec);
  if (!ensemble.positions().allFinite()) {
    throw DivergenceError("bpf_propagate: non-finite particle position");
  }
  return ensemble;
}

Vector bpf_log_increments(const Matrix& positions, const DiffusionModel& model,
                          const Vector& obsIncrement, double dt, Exec exec) {
  require(positions.rows() == model.dim(), "bpf_reweight: dimension mismatch");
  require(obsIncrement.size() == model.dim(), "bpf_reweight: observation dimension mismatch");
  require(dt > 0.0, "bpf_reweight: dt must be positive");
  const Index n = positions.cols();
  Vector out(n);
  if (const auto& lin = model.linear()) {
    const double c = lin->observation;
    for_each_particle(exec, n, [&](Index j) {
      const auto z = positions.col(j);
      out[j] = c * z.dot(obsIncrement) - 0.5 * c * c * z.squaredNorm() * dt;
    });
    return out;
  }
  const Matrix h = observe_columns(positions, model, exec);
  for_each_particle(exec, n, [&](Index j) {
    out[j] = h.col(j).dot(obsIncrement) - 0.5 * h.col(j).squaredNorm() * dt;
  });
  return out;
}

WeightedEnsemble bpf_reweight(WeightedEnsemble ensemble, const DiffusionModel& model,
                              const Vector& obsIncrement, double dt, Exec exec) {
  ensemble.add_log_weights(bpf_log_increments(ensemble.positions(), model, obsIncrement, dt, exec));
  return ensemble;
}

double effective_sample_size(const Vector& weights) {
  require(weights.size() >= 1, "effective_sample_size: empty weights");
  return 1.0 / weights.squaredNorm();
}

std::vector<Index> multinomial_ancestors(const Vector& weights, const SeedSpec& seed) {
  const Index n = weights.size();
  require(n >= 1, "multinomial: need at least one weight");
  std::vector<double> cumulative(static_cast<std::size_t>(n));
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    total += weights[i];
    cumulative[static_cast<std::size_t>(i)] = total;
  }
  const Vector u = uniforms(seed, n);
  std::vector<Index> ancestors(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    const double target = u[j] * total;
    // First index whose cumulative weight exceeds the target; zero-weight
    // entries share their predecessor's cumulative value and are never hit.
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    const auto idx = std::min<std::ptrdiff_t>(it - cumulative.begin(), n - 1);
    ancestors[static_cast<std::size_t>(j)] = static_cast<Index>(idx);
  }
  return ancestors;
}

std::vector<Index> offspring_counts(const std::vector<Index>& ancestors, Index n) {
  std::vector<Index> counts(static_cast<std::size_t>(n), 0);
  for (const Index a : ancestors) {
    require(a >= 0 && a < n, "offspring_counts: ancestor index out of range");
    ++counts[static_cast<std::size_t>(a)];
  }
  return counts;
}

WeightedEnsemble multinomial_resample(const WeightedEnsemble& ensemble, const SeedSpec& seed) {
  const auto ancestors = multinomial_ancestors(ensemble.weights(), seed);
  Matrix positions(ensemble.dim(), ensemble.size());
  for (Index j = 0; j < ensemble.size(); ++j) {
    positions.col(j) = ensemble.positions().col(ancestors[static_cast<std::size_t>(j)]);
  }
  return WeightedEnsemble(std::move(positions));
}

bool resampling_due(const WeightedEnsemble& ensemble, const ResamplingPolicy& policy, double t,
                    double lastResampleTime) {
  switch (policy.kind) {
    case ResamplingPolicy::Kind::Never:
      return false;
    case ResamplingPolicy::Kind::EssThreshold:
      return effective_sample_size(ensemble) <= policy.value * static_cast<double>(ensemble.size());
    case ResamplingPolicy::Kind::FixedInterval:
      // Inclusive boundary; the relative slack absorbs grid-time rounding (k * dt).
      return t - lastResampleTime >= policy.value * (1.0 - 1e-9);
  }
  return false;
}

ResampleOutcome apply_resampling_policy(WeightedEnsemble ensemble, const ResamplingPolicy& policy,
                                        double t, double lastResampleTime, const SeedSpec& seed) {
  require(t >= lastResampleTime, "apply_resampling_policy: t precedes the last resampling time");
  if (!resampling_due(ensemble, policy, t, lastResampleTime)) {
    return {std::move(ensemble), false};
  }
  return {multinomial_resample(ensemble, seed), true};
}

Vector weighted_estimate(const WeightedEnsemble& ensemble, const Observable& phi) {
  Vector total;
  for (Index j = 0; j < ensemble.size(); ++j) {
    const Vector value = phi(ensemble.positions().col(j));
    if (j == 0) total = Vector::Zero(value.size());
    require(value.size() == total.size(), "weighted_estimate: phi output size varies");
    total += ensemble.weights()[j] * value;
  }
  return total;
}

}  // namespace pfscale
