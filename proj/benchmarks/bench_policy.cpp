#include <benchmark/benchmark.h>

#include "qsynth/policy.hpp"

using namespace qsynth;

namespace {

void BM_policy_sample(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  PolicyNet policy(n, 5);
  Rng rng(17);
  const Observation obs(policy.obs_dim(), 0.25);
  for (auto _ : state) {
    benchmark::DoNotOptimize(policy.sample(obs, rng));
  }
}
BENCHMARK(BM_policy_sample)->DenseRange(2, 5, 1);

void BM_policy_backward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  PolicyNet policy(n, 5);
  Rng rng(17);
  const Observation obs(policy.obs_dim(), 0.25);
  const SampledAction a = policy.sample(obs, rng);
  std::vector<double> grad(policy.param_count(), 0.0);
  for (auto _ : state) {
    policy.backward(obs, a.action, 1.0, 0.5, 0.01, grad);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_policy_backward)->DenseRange(2, 5, 1);

}  // namespace
