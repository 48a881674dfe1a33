#pragma once

#include "pfscale/bpf.hpp"
#include "pfscale/core.hpp"
#include "pfscale/model.hpp"

#include <functional>
#include <vector>

namespace pfscale {

/// Equally weighted particle cloud, one column per particle.
class UnweightedEnsemble {
 public:
  explicit UnweightedEnsemble(Matrix positions);

  Index size() const noexcept { return positions_.cols(); }
  Index dim() const noexcept { return positions_.rows(); }
  const Matrix& positions() const noexcept { return positions_; }
  Matrix& mutable_positions() noexcept { return positions_; }

 private:
  Matrix positions_;
};

struct ObservationStats {
  Matrix hValues;  // h(Z_k), one column per particle
  Vector hMean;    // arithmetic mean of the columns
};

ObservationStats observation_stats(const Matrix& positions, const DiffusionModel& model,
                                   Exec exec = Exec::Parallel);

struct GainMatrix {
  Matrix K;
};

/// K_ij = (1/N) sum_k (h_j(Z_k) - hbar_j) Z_{k,i}: the particle/observation
/// cross-covariance. Positions are used uncentered; the centered h-term makes
/// centering immaterial.
GainMatrix constant_gain(const UnweightedEnsemble& ensemble, const DiffusionModel& model);
GainMatrix constant_gain(const Matrix& positions, const ObservationStats& stats);

/// z -> K(z), D x D.
using GainField = std::function<Matrix(const Vector&)>;
/// z -> {dK/dz_0, ..., dK/dz_{D-1}}, each D x D.
using GainJacobian = std::function<std::vector<Matrix>(const Vector&)>;

/// Omega_i = 0.5 sum_j sum_k K_jk dK_ik/dz_j. Identically zero for a constant
/// gain, which is why fpf_step never evaluates it.
Vector omega_general(const GainField& gain, const GainJacobian& jacobian, const Vector& z);

UnweightedEnsemble fpf_init(const LinearGaussianBenchmark& model, Index n, const SeedSpec& seed);

/// One explicit step of the constant-gain feedback particle filter:
/// Z += f dt + g sqrt(dt) xi + K [dY - 0.5 (h(Z) + hbar) dt]
/// with K and hbar frozen at the pre-step ensemble. Particle j draws its
/// noise from seed.child(j), matching bpf_propagate.
UnweightedEnsemble fpf_step(UnweightedEnsemble ensemble, const DiffusionModel& model,
                            const Vector& obsIncrement, double dt, const SeedSpec& seed,
                            Exec exec = Exec::Parallel);
UnweightedEnsemble fpf_step(UnweightedEnsemble ensemble, const DiffusionModel& model,
                            const Vector& obsIncrement, double dt, const Matrix& noise,
                            Exec exec = Exec::Parallel);

/// K [dY - 0.5 (h(Z_k) + hbar) dt] for every particle, D x N. Uses the rank-N
/// factorization K = Z Hc^T / N when N < D.
Matrix fpf_feedback(const Matrix& positions, const ObservationStats& stats,
                    const Vector& obsIncrement, double dt);

/// (1/N) sum_i phi(Z_i).
Vector unweighted_estimate(const UnweightedEnsemble& ensemble, const Observable& phi);

inline Vector unweighted_mean(const UnweightedEnsemble& ensemble) {
  return ensemble.positions().rowwise().mean();
}

}  // namespace pfscale
