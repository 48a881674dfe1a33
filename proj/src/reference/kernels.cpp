#include "pfscale/reference.hpp"

namespace pfscale::reference {

Matrix particle_normals(const SeedSpec& seed, Index dim, Index n) {
  Matrix out(dim, n);
  for (Index j = 0; j < n; ++j) out.col(j) = standard_normals(seed.child(static_cast<std::uint64_t>(j)), dim);
  return out;
}

Matrix propagate(const Matrix& positions, const DiffusionModel& model, double dt,
                 const Matrix& noise) {
  Matrix out(positions.rows(), positions.cols());
  const Vector zero = Vector::Zero(positions.rows());
  for (Index j = 0; j < positions.cols(); ++j) {
    out.col(j) = em_step(positions.col(j), model, zero, dt, noise.col(j));
  }
  return out;
}

Vector log_increments(const Matrix& positions, const DiffusionModel& model,
                      const Vector& obsIncrement, double dt) {
  Vector out(positions.cols());
  for (Index j = 0; j < positions.cols(); ++j) {
    const Vector h = model.observation(positions.col(j));
    double dot = 0.0;
    double sq = 0.0;
    for (Index i = 0; i < h.size(); ++i) {
      dot += h[i] * obsIncrement[i];
      sq += h[i] * h[i];
    }
    out[j] = dot - 0.5 * sq * dt;
  }
  return out;
}

double effective_sample_size(const Vector& weights) {
  double sum = 0.0;
  for (Index i = 0; i < weights.size(); ++i) sum += weights[i] * weights[i];
  return 1.0 / sum;
}

std::vector<Index> multinomial_ancestors(const Vector& weights, const SeedSpec& seed) {
  const Index n = weights.size();
  const Vector u = uniforms(seed, n);
  const double total = weights.sum();
  std::vector<Index> out(static_cast<std::size_t>(n), n - 1);
  for (Index j = 0; j < n; ++j) {
    const double target = u[j] * total;
    double running = 0.0;
    for (Index i = 0; i < n; ++i) {
      running += weights[i];
      if (running > target) {
        out[static_cast<std::size_t>(j)] = i;
        break;
      }
    }
  }
  return out;
}

Matrix constant_gain(const Matrix& positions, const DiffusionModel& model) {
  const Index d = positions.rows();
  const Index n = positions.cols();
  Matrix h(d, n);
  for (Index k = 0; k < n; ++k) h.col(k) = model.observation(positions.col(k));
  Vector hMean = Vector::Zero(d);
  for (Index k = 0; k < n; ++k) hMean += h.col(k);
  hMean /= static_cast<double>(n);
  Matrix gain = Matrix::Zero(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      double sum = 0.0;
      for (Index k = 0; k < n; ++k) sum += (h(j, k) - hMean[j]) * positions(i, k);
      gain(i, j) = sum / static_cast<double>(n);
    }
  }
  return gain;
}

Matrix fpf_step(const Matrix& positions, const DiffusionModel& model, const Vector& obsIncrement,
                double dt, const Matrix& noise) {
  const Index n = positions.cols();
  const Matrix gain = constant_gain(positions, model);
  Vector hMean = Vector::Zero(positions.rows());
  for (Index k = 0; k < n; ++k) hMean += model.observation(positions.col(k));
  hMean /= static_cast<double>(n);
  Matrix out = propagate(positions, model, dt, noise);
  for (Index k = 0; k < n; ++k) {
    const Vector innovation = obsIncrement - 0.5 * (model.observation(positions.col(k)) + hMean) * dt;
    out.col(k) += gain * innovation;
  }
  return out;
}

}  // namespace pfscale::reference
