#include "doctest.h"

#include "pfscale/bpf.hpp"
#include "pfscale/fpf.hpp"
#include "pfscale/reference.hpp"

#include <cmath>

using namespace pfscale;

namespace {

// Same fields as the benchmark but without the linear fast path.
DiffusionModel generic_benchmark(Index d) {
  return DiffusionModel(
      d, [](const Vector& x) { return Vector(-x); },
      [d](const Vector&) { return Matrix(std::sqrt(2.0) * Matrix::Identity(d, d)); },
      [](const Vector& x) { return Vector(2.0 * x); });
}

DiffusionModel nonlinear(Index d) {
  return DiffusionModel(
      d, [](const Vector& x) { return Vector(x.array().sin()); },
      [d](const Vector& x) {
        Matrix g = Matrix::Identity(d, d);
        g(0, d - 1) = 0.3 * std::cos(x(0));
        return g;
      },
      [](const Vector& x) { return Vector(x.array().tanh()); });
}

bool close(const Matrix& a, const Matrix& b, double tol = 1e-12) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a - b).cwiseAbs().maxCoeff() <= tol * std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_SUITE("reference") {

TEST_CASE("particle normals") {
  const SeedSpec seed{1, 0};
  CHECK(particle_normals(seed, 7, 33, Exec::Serial) == reference::particle_normals(seed, 7, 33));
  CHECK(particle_normals(seed, 7, 33, Exec::Parallel) == reference::particle_normals(seed, 7, 33));
}

TEST_CASE("propagation and log increments") {
  for (Index d : {Index{1}, Index{4}, Index{17}}) {
    const Matrix z = particle_normals(SeedSpec{2, 0}, d, 101);
    const Matrix noise = particle_normals(SeedSpec{2, 1}, d, 101);
    const Vector dy = 0.1 * standard_normals(SeedSpec{2, 2}, d);
    for (const DiffusionModel& model : {LinearGaussianBenchmark{d}.model(), generic_benchmark(d), nonlinear(d)}) {
      const Matrix expected = reference::propagate(z, model, 0.01, noise);
      for (Exec exec : {Exec::Serial, Exec::Parallel}) {
        CHECK(close(bpf_propagate(WeightedEnsemble(z), model, 0.01, noise, exec).positions(), expected));
        CHECK(close(bpf_log_increments(z, model, dy, 0.01, exec), reference::log_increments(z, model, dy, 0.01)));
      }
    }
  }
}

TEST_CASE("ESS and ancestors") {
  for (int r = 0; r < 20; ++r) {
    const Index n = 1 + 13 * r;
    const WeightedEnsemble e(Matrix::Zero(1, n), 2.0 * standard_normals(SeedSpec{3, 0}.child(r), n));
    CHECK(effective_sample_size(e.weights()) ==
          doctest::Approx(reference::effective_sample_size(e.weights())).epsilon(1e-12));
    const SeedSpec seed = SeedSpec{3, 1}.child(r);
    CHECK(multinomial_ancestors(e.weights(), seed) == reference::multinomial_ancestors(e.weights(), seed));
  }
}

TEST_CASE("constant gain and FPF step") {
  for (Index d : {Index{1}, Index{5}, Index{20}}) {
    for (Index n : {Index{1}, Index{3}, Index{64}}) {
      const Matrix z = particle_normals(SeedSpec{4, 0}, d, n);
      const Matrix noise = particle_normals(SeedSpec{4, 1}, d, n);
      const Vector dy = 0.1 * standard_normals(SeedSpec{4, 2}, d);
      for (const DiffusionModel& model : {LinearGaussianBenchmark{d}.model(), nonlinear(d)}) {
        CHECK(close(constant_gain(UnweightedEnsemble(z), model).K, reference::constant_gain(z, model)));
        const Matrix expected = reference::fpf_step(z, model, dy, 0.01, noise);
        for (Exec exec : {Exec::Serial, Exec::Parallel}) {
          CHECK(close(fpf_step(UnweightedEnsemble(z), model, dy, 0.01, noise, exec).positions(), expected));
        }
      }
    }
  }
}

}
