#pragma once

#include "pfscale/core.hpp"
#include "pfscale/rng.hpp"

#include <functional>
#include <numbers>
#include <optional>
#include <vector>

namespace pfscale {

/// Coefficients of f(x) = a x, g(x) = s I, h(x) = c x.
struct LinearIsotropic {
  double drift = -1.0;
  double diffusion = std::numbers::sqrt2;
  double observation = 2.0;
};

/// dX = f(X) dt + g(X) dW, dY = h(X) dt + dV with X, Y in R^D.
///
/// The three fields are type-erased; outputs are checked against `dim()` on
/// every call. Models built by `linear_isotropic` also expose their
/// coefficients through `linear()`, which the ensemble kernels use to skip the
/// per-particle function calls.
class DiffusionModel {
 public:
  using VectorField = std::function<Vector(const Vector&)>;
  using MatrixField = std::function<Matrix(const Vector&)>;

  DiffusionModel(Index dim, VectorField drift, MatrixField diffusion, VectorField observation);

  static DiffusionModel linear_isotropic(Index dim, const LinearIsotropic& coeffs);

  Index dim() const noexcept { return dim_; }
  const std::optional<LinearIsotropic>& linear() const noexcept { return linear_; }

  Vector drift(const Vector& x) const;
  Matrix diffusion(const Vector& x) const;
  Vector observation(const Vector& x) const;

 private:
  Index dim_;
  VectorField drift_;
  MatrixField diffusion_;
  VectorField observation_;
  std::optional<LinearIsotropic> linear_;
};

/// The isotropic OU benchmark: f = -x, g = sqrt(2) I, h = 2x. Unit prior
/// variance and unit time constant in every coordinate.
struct LinearGaussianBenchmark {
  Index dim = 1;
  LinearIsotropic coeffs{};

  DiffusionModel model() const { return DiffusionModel::linear_isotropic(dim, coeffs); }

  double stationary_variance() const {
    return coeffs.diffusion * coeffs.diffusion / (-2.0 * coeffs.drift);
  }
};

struct TimeGrid {
  double dt = 0.01;
  std::size_t numSteps = 1;

  TimeGrid(double dt, std::size_t numSteps);

  /// Grid with numSteps = round(t1 / dt); rejects horizons that are not an
  /// integer number of steps.
  static TimeGrid from_horizon(double dt, double t1);

  double t1() const noexcept { return dt * static_cast<double>(numSteps); }
  double time(std::size_t k) const noexcept { return dt * static_cast<double>(k); }
};

/// Hidden state and observation increments on a grid. `states[k]` is X at
/// t_k for k < numSteps and `obsIncrements[k]` covers [t_k, t_{k+1}].
struct TruthPath {
  TimeGrid grid;
  std::vector<Vector> states;
  std::vector<Vector> obsIncrements;
  std::vector<Vector> obsNoiseIncrements;
  Vector finalState;
};

/// x + (f(x) + extraDrift) dt + g(x) sqrt(dt) noise.
Vector em_step(const Vector& x, const DiffusionModel& model, const Vector& extraDrift, double dt,
               const Vector& noise);

/// Streaming truth simulator. Step k uses `seed.child(k)`: the first D
/// normals drive W, the next D drive V.
class TruthStream {
 public:
  TruthStream(const DiffusionModel& model, double dt, Vector x0, const SeedSpec& seed);

  std::size_t step() const noexcept { return step_; }
  double time() const noexcept { return dt_ * static_cast<double>(step_); }
  const Vector& state() const noexcept { return state_; }

  /// Draws dV_k, forms dY_k = h(X_k) dt + dV_k and moves X to t_{k+1}.
  /// Returns dY_k.
  const Vector& advance();

  const Vector& obs_increment() const noexcept { return obsIncrement_; }
  const Vector& obs_noise() const noexcept { return obsNoise_; }

 private:
  const DiffusionModel* model_;
  double dt_;
  Vector state_;
  SeedSpec seed_;
  std::size_t step_ = 0;
  Vector obsIncrement_;
  Vector obsNoise_;
};

TruthPath simulate_truth(const DiffusionModel& model, const TimeGrid& grid, const Vector& x0,
                         const SeedSpec& seed);

/// n i.i.d. draws from the benchmark's stationary law, one column each.
Matrix prior_sample(const LinearGaussianBenchmark& model, Index n, const SeedSpec& seed);

/// Apply em_step to every column of `positions` with column-wise noise.
/// `extraDrift` may be empty (no extra drift) or D x N.
void propagate_columns(Matrix& positions, const DiffusionModel& model, const Matrix& extraDrift,
                       double dt, const Matrix& noise, Exec exec = Exec::Parallel);

/// h applied to every column.
Matrix observe_columns(const Matrix& positions, const DiffusionModel& model,
                       Exec exec = Exec::Parallel);

}  // namespace pfscale
