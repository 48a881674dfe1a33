#include "pfscale/rng.hpp"

#include <random>

namespace pfscale {

namespace {

void fill_normals(const SeedSpec& seed, double* out, Index dim) {
  CounterEngine engine(seed);
  std::normal_distribution<double> normal;
  for (Index i = 0; i < dim; ++i) out[i] = normal(engine);
}

}  // namespace

Vector standard_normals(const SeedSpec& seed, Index dim) {
  Vector out(dim);
  fill_normals(seed, out.data(), dim);
  return out;
}

Matrix particle_normals(const SeedSpec& seed, Index dim, Index n, Exec exec) {
  Matrix out(dim, n);
  for_each_particle(exec, n, [&](Index j) {
    fill_normals(seed.child(static_cast<std::uint64_t>(j)), out.col(j).data(), dim);
  });
  return out;
}

Vector uniforms(const SeedSpec& seed, Index count) {
  CounterEngine engine(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Vector out(count);
  for (Index i = 0; i < count; ++i) out[i] = uniform(engine);
  return out;
}

}  // namespace pfscale
