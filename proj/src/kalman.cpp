#include "pfscale/kalman.hpp"

#include <cmath>

namespace pfscale {

double riccati_step(double variance, double dt, const LinearIsotropic& c) {
  require(variance > 0.0, "riccati_step: variance must be positive");
  require(dt > 0.0, "riccati_step: dt must be positive");
  const double rate = 2.0 * c.drift * variance + c.diffusion * c.diffusion -
                      c.observation * c.observation * variance * variance;
  return variance + rate * dt;
}

KalmanState kalman_init(const LinearGaussianBenchmark& model) {
  return {Vector::Zero(model.dim), model.stationary_variance()};
}

KalmanState kalman_step(const KalmanState& state, const Vector& obsIncrement, double dt,
                        const LinearIsotropic& c) {
  require(state.mean.size() == obsIncrement.size(), "kalman_step: dimension mismatch");
  const double gain = c.observation * state.variance;
  KalmanState next;
  next.mean = state.mean + c.drift * state.mean * dt +
              gain * (obsIncrement - c.observation * state.mean * dt);
  next.variance = riccati_step(state.variance, dt, c);
  return next;
}

SteadyState steady_state(const LinearGaussianBenchmark& model) {
  const LinearIsotropic& c = model.coeffs;
  const double h2 = c.observation * c.observation;
  const double s2 = c.diffusion * c.diffusion;
  if (h2 == 0.0) return {model.stationary_variance(), 0.0};
  const double p = (c.drift + std::sqrt(c.drift * c.drift + h2 * s2)) / h2;
  return {p, c.observation * p};
}

}  // namespace pfscale
