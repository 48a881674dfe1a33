#include "doctest.h"

#include "checks.hpp"

#include "pfscale/kalman.hpp"
#include "pfscale/metrics.hpp"
#include "pfscale/trial.hpp"

#include <cmath>

using namespace pfscale;

TEST_SUITE("kalman") {

TEST_CASE("Riccati step") {
  CHECK(riccati_step(0.5, 0.01) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(riccati_step(1.0, 0.01) == doctest::Approx(0.96).epsilon(1e-14));
  double p = 1.0;
  for (int k = 0; k < 1000; ++k) p = riccati_step(p, 0.01);
  CHECK(std::abs(p - 0.5) <= 1e-3);
  CHECK_THROWS_AS(riccati_step(0.0, 0.01), InvalidInput);
  CHECK_THROWS_AS(riccati_step(1.0, 0.0), InvalidInput);
  const auto outcome = checks::riccati_fixed_point_and_monotone();
  INFO(outcome.detail);
  CHECK(outcome.pass);
}

TEST_CASE("Kalman step") {
  const LinearGaussianBenchmark bench{3};
  KalmanState s = kalman_init(bench);
  CHECK(s.mean.isZero(0.0));
  CHECK(s.variance == doctest::Approx(1.0));
  s.mean << 1.0, -2.0, 0.5;
  s.variance = 0.7;
  const double dt = 0.01;
  const KalmanState next = kalman_step(s, 2.0 * s.mean * dt, dt);
  CHECK(next.mean.isApprox(s.mean * (1.0 - dt), 1e-14));
  CHECK(next.variance == doctest::Approx(riccati_step(0.7, dt)));
  CHECK_THROWS_AS(kalman_step(s, Vector::Zero(2), dt), InvalidInput);
}

TEST_CASE("steady state") {
  const SteadyState ss = steady_state(LinearGaussianBenchmark{1});
  CHECK(ss.variance == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(ss.gain == doctest::Approx(1.0).epsilon(1e-14));
  for (double c : {0.5, 1.0, 2.0, 3.0}) {
    LinearGaussianBenchmark b{1};
    b.coeffs.observation = c;
    const double p = steady_state(b).variance;
    CHECK(p > 0.0);
    CHECK(2.0 - 2.0 * p - c * c * p * p == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(steady_state(b).gain == doctest::Approx(c * p));
  }
}

TEST_CASE("variance stays in (0, prior] along a filter run") {
  const LinearGaussianBenchmark bench{2};
  KalmanState s = kalman_init(bench);
  const Vector dy = Vector::Constant(2, 0.02);
  for (int k = 0; k < 5000; ++k) {
    s = kalman_step(s, dy, 0.01);
    CHECK(s.variance > 0.0);
    CHECK(s.variance <= 1.0);
  }
}

TEST_CASE("time-averaged MSE of the exact filter") {
  std::vector<double> mse;
  for (int trial = 0; trial < 5; ++trial) {
    TrialSpec spec;
    spec.numSteps = 20000;
    spec.truthSeed = truth_seed(21, 1, trial);
    const TrialResult r = run_kalman_trial(spec);
    REQUIRE(r.status == TrialResult::Status::Ok);
    CHECK(r.timeAvgMse == doctest::Approx(time_avg_mse(r.mse)).epsilon(1e-12));
    mse.push_back(r.timeAvgMse);
  }
  const double mean = mean_and_standard_error(mse).first;
  CHECK(mean >= 0.45);
  CHECK(mean <= 0.55);
}

TEST_CASE("no particle filter beats the exact filter") {
  const int trials = 50;
  for (FilterKind kind : {FilterKind::Bpf, FilterKind::Fpf}) {
    for (Index n : {Index{5}, Index{200}}) {
      std::vector<double> diff;
      for (int trial = 0; trial < trials; ++trial) {
        TrialSpec spec;
        spec.numSteps = 2000;
        spec.particles = n;
        spec.truthSeed = truth_seed(22, 1, trial);
        spec.filterSeed = filter_seed(22, kind, 1, n, trial);
        spec.policy = ResamplingPolicy::ess_threshold(0.5);
        spec.recordSeries = false;
        const TrialResult pf = run_trial(kind, spec);
        const TrialResult kf = run_kalman_trial(spec);
        REQUIRE(pf.status == TrialResult::Status::Ok);
        diff.push_back(pf.timeAvgMse - kf.timeAvgMse);
      }
      const auto [mean, se] = mean_and_standard_error(diff);
      INFO(to_string(kind) << " N=" << n << " mean excess " << mean << " se " << se);
      CHECK(mean >= -3.0 * se);
    }
  }
}

}
