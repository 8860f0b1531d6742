#include <benchmark/benchmark.h>

#include "qsynth/rng.hpp"
#include "qsynth/shift_rule.hpp"
#include "qsynth/statevector.hpp"

using namespace qsynth;

namespace {

Circuit make_circuit(int n, int gates, std::uint64_t seed) {
  Rng rng(seed);
  Circuit c(n);
  for (int i = 0; i < gates; ++i) {
    switch (rng.uniform_int(4)) {
      case 0:
        c.gates.push_back(GateInstr::rotation(GateKind::Rx, rng.uniform_int(n),
                                              rng.uniform(-M_PI, M_PI)));
        break;
      case 1:
        c.gates.push_back(GateInstr::rotation(GateKind::Ry, rng.uniform_int(n),
                                              rng.uniform(-M_PI, M_PI)));
        break;
      case 2:
        c.gates.push_back(GateInstr::rotation(GateKind::Rz, rng.uniform_int(n),
                                              rng.uniform(-M_PI, M_PI)));
        break;
      default: {
        const int control = rng.uniform_int(n);
        int target = rng.uniform_int(n - 1);
        if (target >= control) ++target;
        c.gates.push_back(GateInstr::cnot(control, target));
      }
    }
  }
  return c;
}

void BM_run_circuit(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Circuit c = make_circuit(n, 20, 1234);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_circuit(c));
  }
  state.SetItemsProcessed(state.iterations() * c.gate_count());
}
BENCHMARK(BM_run_circuit)->DenseRange(2, 10, 2);

void BM_fidelity_gradient(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Circuit c = make_circuit(n, 8, 99);
  const StateVector target = run_circuit(make_circuit(n, 8, 7));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fidelity_gradient(c, target));
  }
}
BENCHMARK(BM_fidelity_gradient)->DenseRange(2, 6, 2);

}  // namespace
