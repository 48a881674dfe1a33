#include "pfscale/fpf.hpp"

#include <cmath>
#include <utility>

namespace pfscale {

UnweightedEnsemble::UnweightedEnsemble(Matrix positions) : positions_(std::move(positions)) {
  require(positions_.cols() >= 1, "UnweightedEnsemble: need at least one particle");
  require(positions_.rows() >= 1, "UnweightedEnsemble: need positive dimension");
  require(positions_.allFinite(), "UnweightedEnsemble: positions must be finite");
}

ObservationStats observation_stats(const Matrix& positions, const DiffusionModel& model,
                                   Exec exec) {
  ObservationStats stats;
  stats.hValues = observe_columns(positions, model, exec);
  stats.hMean = stats.hValues.rowwise().mean();
  return stats;
}

GainMatrix constant_gain(const Matrix& positions, const ObservationStats& stats) {
  require(stats.hValues.cols() == positions.cols(), "constant_gain: size mismatch");
  const Matrix centered = stats.hValues.colwise() - stats.hMean;
  return {positions * centered.transpose() / static_cast<double>(positions.cols())};
}

GainMatrix constant_gain(const UnweightedEnsemble& ensemble, const DiffusionModel& model) {
  require(ensemble.dim() == model.dim(), "constant_gain: dimension mismatch");
  return constant_gain(ensemble.positions(), observation_stats(ensemble.positions(), model));
}

Vector omega_general(const GainField& gain, const GainJacobian& jacobian, const Vector& z) {
  const Index d = z.size();
  const Matrix k = gain(z);
  const std::vector<Matrix> dk = jacobian(z);
  require(k.rows() == d && k.cols() == d, "omega_general: gain must be D x D");
  require(static_cast<Index>(dk.size()) == d, "omega_general: need one jacobian slice per coordinate");
  Vector omega = Vector::Zero(d);
  for (Index j = 0; j < d; ++j) {
    const Matrix& slice = dk[static_cast<std::size_t>(j)];
    require(slice.rows() == d && slice.cols() == d, "omega_general: jacobian slice must be D x D");
    // sum_k K_jk dK_ik/dz_j = (dK/dz_j * K_j.^T)_i
    omega += slice * k.row(j).transpose();
  }
  return 0.5 * omega;
}

UnweightedEnsemble fpf_init(const LinearGaussianBenchmark& model, Index n, const SeedSpec& seed) {
  return UnweightedEnsemble(prior_sample(model, n, seed));
}

Matrix fpf_feedback(const Matrix& positions, const ObservationStats& stats,
                    const Vector& obsIncrement, double dt) {
  const Index d = positions.rows();
  const Index n = positions.cols();
  Matrix innovation = (stats.hValues.colwise() + stats.hMean) * (-0.5 * dt);
  innovation.colwise() += obsIncrement;
  if (n < d) {
    const Matrix centered = stats.hValues.colwise() - stats.hMean;
    const Matrix inner = centered.transpose() * innovation;  // N x N
    return positions * inner / static_cast<double>(n);
  }
  return constant_gain(positions, stats).K * innovation;
}

UnweightedEnsemble fpf_step(UnweightedEnsemble ensemble, const DiffusionModel& model,
                            const Vector& obsIncrement, double dt, const SeedSpec& seed,
                            Exec exec) {
  const Matrix noise = particle_normals(seed, ensemble.dim(), ensemble.size(), exec);
  return fpf_step(std::move(ensemble), model, obsIncrement, dt, noise, exec);
}

UnweightedEnsemble fpf_step(UnweightedEnsemble ensemble, const DiffusionModel& model,
                            const Vector& obsIncrement, double dt, const Matrix& noise,
                            Exec exec) {
  require(ensemble.dim() == model.dim(), "fpf_step: dimension mismatch");
  require(obsIncrement.size() == model.dim(), "fpf_step: observation dimension mismatch");
  require(dt > 0.0, "fpf_step: dt must be positive");
  const ObservationStats stats = observation_stats(ensemble.positions(), model, exec);
  const Matrix feedback = fpf_feedback(ensemble.positions(), stats, obsIncrement, dt);
  Matrix& z = ensemble.mutable_positions();
  propagate_columns(z, model, Matrix(), dt, noise, exec);
  z += feedback;
  if (!z.allFinite()) throw DivergenceError("fpf_step: non-finite particle position");
  return ensemble;
}

Vector unweighted_estimate(const UnweightedEnsemble& ensemble, const Observable& phi) {
  Vector total;
  for (Index j = 0; j < ensemble.size(); ++j) {
    const Vector value = phi(ensemble.positions().col(j));
    if (j == 0) total = Vector::Zero(value.size());
    require(value.size() == total.size(), "unweighted_estimate: phi output size varies");
    total += value;
  }
  return total / static_cast<double>(ensemble.size());
}

}  // namespace pfscale
