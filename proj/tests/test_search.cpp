#include "doctest.h"

#include "pfscale/search.hpp"

#include <cmath>

using namespace pfscale;

namespace {

SizePredicate threshold_predicate(Index smallest, int* calls) {
  return [smallest, calls](Index n) {
    ++*calls;
    SizeEvaluation e;
    e.passed = n >= smallest;
    e.trials = 4;
    return e;
  };
}

SearchConfig quick_config() {
  SearchConfig c;
  c.t1 = 20.0;
  c.initialTrials = 4;
  c.maxTrials = 16;
  c.maxParticles = 256;
  c.masterSeed = 3;
  return c;
}

}  // namespace

TEST_SUITE("search") {

TEST_CASE("doubling then bisection finds the threshold") {
  for (Index target : {Index{1}, Index{2}, Index{3}, Index{13}, Index{64}, Index{65}, Index{200}}) {
    int calls = 0;
    const SizeSearchResult r = smallest_passing_size(threshold_predicate(target, &calls), 256);
    REQUIRE(r.reachable());
    CHECK(*r.particles == target);
    CHECK(calls == static_cast<int>(r.evaluations.size()));
    CHECK(calls <= 2 * 9 + 1);
  }
  int calls = 0;
  const SizeSearchResult none = smallest_passing_size(threshold_predicate(1000, &calls), 300);
  CHECK_FALSE(none.reachable());
  CHECK(none.evaluations.back().particles == 300);
  CHECK(none.trialsUsed == 4);
}

TEST_CASE("trivial tolerances") {
  const SearchConfig c = quick_config();
  const SizeSearchResult two = required_ensemble_size(FilterKind::Bpf, 10, 2.0, c);
  CHECK(two.particles.value() == 1);
  CHECK(two.evaluations.empty());
  CHECK_FALSE(required_ensemble_size(FilterKind::Fpf, 10, 0.5, c).reachable());
  CHECK_FALSE(required_ensemble_size(FilterKind::Fpf, 10, 0.3, c).reachable());
  CHECK_THROWS_AS(required_ensemble_size(FilterKind::Kalman, 10, 1.0, c), InvalidInput);
}

TEST_CASE("config validation") {
  SearchConfig c = quick_config();
  c.maxTrials = 2;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = quick_config();
  c.initialTrials = 1;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = quick_config();
  CHECK_THROWS_AS(collapse_ensemble_size(10, 20.0, c), InvalidInput);
  CHECK_THROWS_AS(collapse_ensemble_size(10, 0.0, c), InvalidInput);
}

TEST_CASE("required size is non-increasing in the tolerance") {
  const SearchConfig c = quick_config();
  for (FilterKind kind : {FilterKind::Fpf, FilterKind::Bpf}) {
    Index previous = c.maxParticles + 1;
    for (double eps : {0.85, 1.0, 1.5}) {
      const SizeSearchResult r = required_ensemble_size(kind, 10, eps, c);
      const Index n = r.particles.value_or(c.maxParticles + 1);
      INFO(to_string(kind) << " eps=" << eps << " N=" << n);
      CHECK(n <= previous);
      previous = n;
      for (const auto& e : r.evaluations) {
        CHECK(e.trials >= c.initialTrials);
        CHECK(e.trials <= c.maxTrials);
      }
    }
  }
}

TEST_CASE("search decisions are reproducible and worker-independent") {
  SearchConfig c = quick_config();
  c.workers = 1;
  const SizeSearchResult a = required_ensemble_size(FilterKind::Fpf, 10, 1.0, c);
  c.workers = 4;
  const SizeSearchResult b = required_ensemble_size(FilterKind::Fpf, 10, 1.0, c);
  REQUIRE(a.evaluations.size() == b.evaluations.size());
  for (std::size_t i = 0; i < a.evaluations.size(); ++i) {
    CHECK(a.evaluations[i].particles == b.evaluations[i].particles);
    CHECK(a.evaluations[i].estimate == b.evaluations[i].estimate);
  }
  CHECK(a.particles == b.particles);
}

TEST_CASE("collapse search") {
  SearchConfig c = quick_config();
  c.t1 = 2.0;
  const SizeSearchResult r = collapse_ensemble_size(20, 0.05, c);
  REQUIRE(r.reachable());
  for (const auto& e : r.evaluations) {
    if (e.particles == *r.particles) {
      CHECK(e.passed);
      CHECK(e.estimate >= 0.05);
    }
    if (e.particles < *r.particles) CHECK_FALSE(e.passed);
  }
  // Fewer particles than the ESS threshold collapse at t = 0.
  for (const auto& e : r.evaluations) {
    if (e.particles <= 10) CHECK(e.estimate == 0.0);
  }
  // Collapse time grows only logarithmically in N, so 0.1 is out of reach under the cap.
  const SizeSearchResult far = collapse_ensemble_size(20, 0.1, c);
  CHECK_FALSE(far.reachable());
  CHECK(far.evaluations.back().particles == c.maxParticles);
}

}
