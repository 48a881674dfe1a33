#pragma once

#include "pfscale/core.hpp"
#include "pfscale/model.hpp"

namespace pfscale {

/// Kalman-Bucy posterior for an isotropic linear model. Coordinates decouple,
/// so one scalar variance serves every coordinate.
struct KalmanState {
  Vector mean;
  double variance = 1.0;
};

/// P + (2aP + s^2 - c^2 P^2) dt. Explicit Euler on the Riccati ODE.
double riccati_step(double variance, double dt, const LinearIsotropic& coeffs = {});

/// Initial state from the stationary prior: mean 0, variance s^2 / (-2a).
KalmanState kalman_init(const LinearGaussianBenchmark& model);

/// Gain c P; mean += a mean dt + gain (dY - c mean dt) per coordinate, then
/// the Riccati step.
KalmanState kalman_step(const KalmanState& state, const Vector& obsIncrement, double dt,
                        const LinearIsotropic& coeffs = {});

struct SteadyState {
  double variance;  // P*
  double gain;      // c P*
};

/// Positive root of s^2 + 2aP - c^2 P^2 = 0.
SteadyState steady_state(const LinearGaussianBenchmark& model);

}  // namespace pfscale
