#include "pfscale/model.hpp"

#include <cmath>
#include <utility>

namespace pfscale {

DiffusionModel::DiffusionModel(Index dim, VectorField drift, MatrixField diffusion,
                               VectorField observation)
    : dim_(dim),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      observation_(std::move(observation)) {
  require(dim >= 1, "DiffusionModel: dim must be positive");
  require(drift_ && diffusion_ && observation_, "DiffusionModel: all three fields are required");
}

DiffusionModel DiffusionModel::linear_isotropic(Index dim, const LinearIsotropic& c) {
  DiffusionModel model(
      dim, [a = c.drift](const Vector& x) -> Vector { return a * x; },
      [s = c.diffusion, dim](const Vector&) -> Matrix {
        return s * Matrix::Identity(dim, dim);
      },
      [h = c.observation](const Vector& x) -> Vector { return h * x; });
  model.linear_ = c;
  return model;
}

Vector DiffusionModel::drift(const Vector& x) const {
  require(x.size() == dim_, "drift: input dimension mismatch");
  Vector out = drift_(x);
  require(out.size() == dim_, "drift: output dimension mismatch");
  return out;
}

Matrix DiffusionModel::diffusion(const Vector& x) const {
  require(x.size() == dim_, "diffusion: input dimension mismatch");
  Matrix out = diffusion_(x);
  require(out.rows() == dim_ && out.cols() == dim_, "diffusion: output must be D x D");
  return out;
}

Vector DiffusionModel::observation(const Vector& x) const {
  require(x.size() == dim_, "observation: input dimension mismatch");
  Vector out = observation_(x);
  require(out.size() == dim_, "observation: output dimension mismatch");
  return out;
}

TimeGrid::TimeGrid(double dt_, std::size_t numSteps_) : dt(dt_), numSteps(numSteps_) {
  require(dt > 0.0 && std::isfinite(dt), "TimeGrid: dt must be positive");
  require(numSteps >= 1, "TimeGrid: numSteps must be at least 1");
}

TimeGrid TimeGrid::from_horizon(double dt, double t1) {
  require(dt > 0.0 && std::isfinite(dt), "TimeGrid: dt must be positive");
  require(t1 > 0.0 && std::isfinite(t1), "TimeGrid: t1 must be positive");
  const double steps = std::round(t1 / dt);
  require(steps >= 1.0, "TimeGrid: t1 shorter than one step");
  require(std::abs(steps * dt - t1) <= 1e-9 * t1, "TimeGrid: t1 is not a multiple of dt");
  return TimeGrid(dt, static_cast<std::size_t>(steps));
}

Vector em_step(const Vector& x, const DiffusionModel& model, const Vector& extraDrift, double dt,
               const Vector& noise) {
  require(x.size() == model.dim(), "em_step: state dimension mismatch");
  require(extraDrift.size() == model.dim(), "em_step: extraDrift dimension mismatch");
  require(noise.size() == model.dim(), "em_step: noise dimension mismatch");
  require(dt > 0.0, "em_step: dt must be positive");
  const Vector diffusionTerm = model.diffusion(x) * (std::sqrt(dt) * noise);
  return x + (model.drift(x) + extraDrift) * dt + diffusionTerm;
}

TruthStream::TruthStream(const DiffusionModel& model, double dt, Vector x0, const SeedSpec& seed)
    : model_(&model), dt_(dt), state_(std::move(x0)), seed_(seed) {
  require(state_.size() == model.dim(), "TruthStream: x0 dimension mismatch");
  require(dt > 0.0, "TruthStream: dt must be positive");
}

const Vector& TruthStream::advance() {
  const Index d = model_->dim();
  const Vector normals = standard_normals(seed_.child(step_), 2 * d);
  obsNoise_ = std::sqrt(dt_) * normals.tail(d);
  obsIncrement_ = model_->observation(state_) * dt_ + obsNoise_;
  state_ = em_step(state_, *model_, Vector::Zero(d), dt_, normals.head(d));
  if (!state_.allFinite() || !obsIncrement_.allFinite()) {
    throw DivergenceError("truth path produced a non-finite value", step_);
  }
  ++step_;
  return obsIncrement_;
}

TruthPath simulate_truth(const DiffusionModel& model, const TimeGrid& grid, const Vector& x0,
                         const SeedSpec& seed) {
  TruthStream stream(model, grid.dt, x0, seed);
  TruthPath path{grid, {}, {}, {}, {}};
  path.states.reserve(grid.numSteps);
  path.obsIncrements.reserve(grid.numSteps);
  path.obsNoiseIncrements.reserve(grid.numSteps);
  for (std::size_t k = 0; k < grid.numSteps; ++k) {
    path.states.push_back(stream.state());
    stream.advance();
    path.obsIncrements.push_back(stream.obs_increment());
    path.obsNoiseIncrements.push_back(stream.obs_noise());
  }
  path.finalState = stream.state();
  return path;
}

Matrix prior_sample(const LinearGaussianBenchmark& model, Index n, const SeedSpec& seed) {
  require(n >= 1, "prior_sample: n must be at least 1");
  Matrix z = particle_normals(seed, model.dim, n);
  const double sd = std::sqrt(model.stationary_variance());
  if (sd != 1.0) z *= sd;
  return z;
}

void propagate_columns(Matrix& positions, const DiffusionModel& model, const Matrix& extraDrift,
                       double dt, const Matrix& noise, Exec exec) {
  const Index d = model.dim();
  const Index n = positions.cols();
  require(positions.rows() == d, "propagate: position dimension mismatch");
  require(noise.rows() == d && noise.cols() == n, "propagate: noise must be D x N");
  const bool hasExtra = extraDrift.size() != 0;
  require(!hasExtra || (extraDrift.rows() == d && extraDrift.cols() == n),
          "propagate: extraDrift must be D x N");
  require(dt > 0.0, "propagate: dt must be positive");
  const double sqrtDt = std::sqrt(dt);

  if (const auto& lin = model.linear()) {
    const double a = lin->drift;
    const double s = lin->diffusion;
    for_each_particle(exec, n, [&](Index j) {
      auto z = positions.col(j);
      for (Index i = 0; i < d; ++i) {
        const double drift = hasExtra ? a * z[i] + extraDrift(i, j) : a * z[i];
        z[i] = z[i] + drift * dt + s * (sqrtDt * noise(i, j));
      }
    });
    return;
  }

  // Validate the fields serially so a dimension error cannot escape a parallel region.
  if (n > 0) {
    const Vector probe = positions.col(0);
    model.drift(probe);
    model.diffusion(probe);
  }
  for_each_particle(exec, n, [&](Index j) {
    const Vector z = positions.col(j);
    Vector drift = model.drift(z);
    if (hasExtra) drift += extraDrift.col(j);
    const Vector diffusionTerm = model.diffusion(z) * (sqrtDt * noise.col(j));
    positions.col(j) = z + drift * dt + diffusionTerm;
  });
}

Matrix observe_columns(const Matrix& positions, const DiffusionModel& model, Exec exec) {
  require(positions.rows() == model.dim(), "observe: position dimension mismatch");
  if (const auto& lin = model.linear()) return lin->observation * positions;
  Matrix out(positions.rows(), positions.cols());
  if (positions.cols() > 0) model.observation(positions.col(0));
  for_each_particle(exec, positions.cols(),
                    [&](Index j) { out.col(j) = model.observation(positions.col(j)); });
  return out;
}

}  // namespace pfscale
