#include "pfscale/bpf.hpp"
#include "pfscale/fpf.hpp"
#include "pfscale/reference.hpp"

#include <benchmark/benchmark.h>

using namespace pfscale;

namespace {

// Arguments: {D, N}.
void sizes(benchmark::internal::Benchmark* b) {
  for (int d : {10, 100}) {
    for (int n : {100, 10000}) b->Args({d, n});
  }
}

struct Fixture {
  Index d, n;
  DiffusionModel model;
  Matrix z, noise;
  Vector dy;

  explicit Fixture(const benchmark::State& state)
      : d(state.range(0)),
        n(state.range(1)),
        model(LinearGaussianBenchmark{d}.model()),
        z(particle_normals(SeedSpec{1, 0}, d, n)),
        noise(particle_normals(SeedSpec{1, 1}, d, n)),
        dy(0.1 * standard_normals(SeedSpec{1, 2}, d)) {}
};

void set_items(benchmark::State& state, const Fixture& f) {
  state.SetItemsProcessed(state.iterations() * f.d * f.n);
}

void BM_Normals_Reference(benchmark::State& state) {
  const Fixture f(state);
  for (auto _ : state) benchmark::DoNotOptimize(reference::particle_normals(SeedSpec{2, 0}, f.d, f.n));
  set_items(state, f);
}
void BM_Normals_Serial(benchmark::State& state) {
  const Fixture f(state);
  for (auto _ : state) benchmark::DoNotOptimize(particle_normals(SeedSpec{2, 0}, f.d, f.n, Exec::Serial));
  set_items(state, f);
}
void BM_Normals_Parallel(benchmark::State& state) {
  const Fixture f(state);
  for (auto _ : state) benchmark::DoNotOptimize(particle_normals(SeedSpec{2, 0}, f.d, f.n, Exec::Parallel));
  set_items(state, f);
}

void BM_Propagate_Reference(benchmark::State& state) {
  const Fixture f(state);
  for (auto _ : state) benchmark::DoNotOptimize(reference::propagate(f.z, f.model, 0.01, f.noise));
  set_items(state, f);
}
template <Exec E>
void BM_Propagate(benchmark::State& state) {
  const Fixture f(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bpf_propagate(WeightedEnsemble(f.z), f.model, 0.01, f.noise, E).positions());
  }
  set_items(state, f);
}

void BM_LogIncrements_Reference(benchmark::State& state) {
  const Fixture f(state);
  for (auto _ : state) benchmark::DoNotOptimize(reference::log_increments(f.z, f.model, f.dy, 0.01));
  set_items(state, f);
}
template <Exec E>
void BM_LogIncrements(benchmark::State& state) {
  const Fixture f(state);
  for (auto _ : state) benchmark::DoNotOptimize(bpf_log_increments(f.z, f.model, f.dy, 0.01, E));
  set_items(state, f);
}

void BM_FpfStep_Reference(benchmark::State& state) {
  const Fixture f(state);
  for (auto _ : state) benchmark::DoNotOptimize(reference::fpf_step(f.z, f.model, f.dy, 0.01, f.noise));
  set_items(state, f);
}
template <Exec E>
void BM_FpfStep(benchmark::State& state) {
  const Fixture f(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fpf_step(UnweightedEnsemble(f.z), f.model, f.dy, 0.01, f.noise, E).positions());
  }
  set_items(state, f);
}

}  // namespace

BENCHMARK(BM_Normals_Reference)->Apply(sizes);
BENCHMARK(BM_Normals_Serial)->Apply(sizes);
BENCHMARK(BM_Normals_Parallel)->Apply(sizes);
BENCHMARK(BM_Propagate_Reference)->Apply(sizes);
BENCHMARK(BM_Propagate<Exec::Serial>)->Apply(sizes);
BENCHMARK(BM_Propagate<Exec::Parallel>)->Apply(sizes);
BENCHMARK(BM_LogIncrements_Reference)->Apply(sizes);
BENCHMARK(BM_LogIncrements<Exec::Serial>)->Apply(sizes);
BENCHMARK(BM_LogIncrements<Exec::Parallel>)->Apply(sizes);
BENCHMARK(BM_FpfStep_Reference)->Apply(sizes);
BENCHMARK(BM_FpfStep<Exec::Serial>)->Apply(sizes);
BENCHMARK(BM_FpfStep<Exec::Parallel>)->Apply(sizes);

BENCHMARK_MAIN();
