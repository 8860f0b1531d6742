#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "qsynth/adam.hpp"
#include "qsynth/refine.hpp"
#include "support/test_oracles.hpp"

using namespace qsynth;
namespace oracle = qsynth::testing;

namespace {

StateVector basis_state(int n, std::size_t index) {
  StateVector s = zero_state(n);
  s.amps[0] = 0.0;
  s.amps[index] = 1.0;
  return s;
}

StateVector bell_phi_plus() {
  StateVector s = zero_state(2);
  const double r = std::sqrt(0.5);
  s.amps = {cplx{r, 0}, cplx{0, 0}, cplx{0, 0}, cplx{r, 0}};
  return s;
}

}  // namespace

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  AdamState adam(3, 0.1);
  std::vector<double> params{1.0, -2.0, 0.5};
  const std::vector<double> grads(3, 0.0);
  adam_step(adam, params, grads);
  CHECK(params == std::vector<double>{1.0, -2.0, 0.5});
}

TEST_CASE("adam: first-step bias correction") {
  AdamState adam(1, 0.1);
  std::vector<double> params{0.0};
  adam_step(adam, params, std::vector<double>{1.0});
  // m_hat = v_hat = 1 at t = 1, so the step is -lr / (1 + eps)
  CHECK(params[0] == doctest::Approx(-0.1).epsilon(1e-7));
  CHECK(params[0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-15));
}

TEST_CASE("adam: componentwise symmetry") {
  AdamState adam(2, 0.05);
  std::vector<double> params{0.3, 0.3};
  for (int i = 0; i < 10; ++i) adam_step(adam, params, std::vector<double>{0.7, 0.7});
  CHECK(params[0] == params[1]);
}

TEST_CASE("adam matches a frozen 5-step scalar trajectory") {
  // unrolled independently at 60-digit precision for g = 1, -2, 3, 0.5, -1
  const double expected[] = {-0.099999999000000006, -0.063389646527924906,
                             -0.097713754398269931, -0.13328453907399862,
                             -0.14836095716742542};
  const double gs[] = {1.0, -2.0, 3.0, 0.5, -1.0};
  AdamState adam(1, 0.1);
  std::vector<double> params{0.0};
  for (int t = 0; t < 5; ++t) {
    adam_step(adam, params, std::vector<double>{gs[t]});
    CHECK(std::abs(params[0] - expected[t]) < 1e-12);
  }
}

TEST_CASE("adam rejects non-finite gradients") {
  AdamState adam(1, 0.1);
  std::vector<double> params{0.0};
  CHECK_THROWS_AS(
      adam_step(adam, params,
                std::vector<double>{std::numeric_limits<double>::quiet_NaN()}),
      std::runtime_error);
}

TEST_CASE("refine_angles drives a single rotation to the optimum") {
  Circuit c(1);
  c.gates = {GateInstr::rotation(GateKind::Rx, 0, 0.3)};
  const RefineResult r = refine_angles(c, basis_state(1, 1));
  CHECK(r.final_fidelity >= 0.999);
  CHECK(r.steps_used <= 300);
  // F >= 0.999 pins |theta| within 2*sqrt(1e-3) of pi
  CHECK(std::abs(std::abs(r.circuit.gates[0].angle) - M_PI) < 0.07);
  // fidelity trace is nondecreasing once Adam's moment transients settle
  for (std::size_t i = 11; i < r.trace.size(); ++i)
    CHECK(r.trace[i] >= r.trace[i - 1] - 1e-9);
}

TEST_CASE("refine_angles is a no-op without rotations") {
  Circuit c(2);
  c.gates = {GateInstr::cnot(0, 1)};
  const RefineResult r = refine_angles(c, bell_phi_plus());
  CHECK(r.trace.size() == 1);
  CHECK(r.steps_used == 0);
  CHECK(r.circuit.gate_count() == 1);
}

TEST_CASE("refine_angles recovers the bell preparation angle") {
  Circuit c(2);
  c.gates = {GateInstr::rotation(GateKind::Ry, 0, 1.0), GateInstr::cnot(0, 1)};
  const RefineResult r = refine_angles(c, bell_phi_plus());
  CHECK(r.final_fidelity >= 0.999);
  CHECK(r.circuit.gates[0].angle == doctest::Approx(M_PI / 2).epsilon(0.05));
}

TEST_CASE("refine_angles never returns worse than the initial fidelity") {
  Rng rng(808);
  for (int trial = 0; trial < 15; ++trial) {
    const Circuit c = oracle::random_circuit(2, 4, rng);
    const StateVector target = oracle::random_state(2, rng);
    const double f0 = fidelity(run_circuit(c), target);
    RefineOptions opts;
    opts.max_steps = 40;
    const RefineResult r = refine_angles(c, target, opts);
    CHECK(r.final_fidelity >= f0 - 1e-9);
    CHECK(fidelity(run_circuit(r.circuit), target) ==
          doctest::Approx(r.final_fidelity).epsilon(1e-12));
    for (const std::size_t idx : r.circuit.rotation_indices()) {
      CHECK(r.circuit.gates[idx].angle <= M_PI + 1e-12);
      CHECK(r.circuit.gates[idx].angle >= -M_PI - 1e-12);
    }
  }
}

TEST_CASE("two-stage hook: no trigger once the threshold is met") {
  EnvConfig cfg;
  cfg.n = 2;
  cfg.lambda = 1;
  cfg.seed = 4;
  Environment env(cfg, basis_state(2, 0));  // |00>, satisfied from the start
  TwoStageHook hook;
  env.set_two_stage(true);
  env.set_refinement_hook(&hook);
  env.reset();
  const StepResult sr = env.step({2, 0, 0, 0.9});  // placeholder Rz(0) = identity
  CHECK(sr.terminated);
  CHECK(hook.refinement_count() == 0);
}

TEST_CASE("two-stage hook refines at half budget") {
  EnvConfig cfg;
  cfg.n = 2;
  cfg.lambda = 1;  // L = 2, trigger depth 1
  cfg.seed = 4;
  Environment env(cfg, basis_state(2, 1));  // |01>: Rx on qubit 0 solves it
  TwoStageHook hook;
  env.set_two_stage(true);
  env.set_refinement_hook(&hook);
  const double f0 = env.reset().fidelity;
  CHECK(f0 == doctest::Approx(0.0));
  const StepResult sr = env.step({0, 0, 0, 0.2});  // angle ignored in two-stage
  CHECK(hook.refinement_count() == 1);
  CHECK(sr.terminated);
  CHECK(sr.info.fidelity >= 0.99);
  // reward carries the refinement jump plus the terminal bonus
  CHECK(sr.reward == doctest::Approx(1.0 + (sr.info.fidelity - f0)).epsilon(1e-9));
  // refined angle written back; the hook stops at the episode threshold
  // 1 - F <= 0.01, i.e. within 2*sqrt(0.01) of pi
  CHECK(std::abs(std::abs(env.circuit().gates[0].angle) - M_PI) < 0.25);
}

TEST_CASE("two-stage hook refines again at episode end") {
  EnvConfig cfg;
  cfg.n = 2;
  cfg.lambda = 2;  // L = 4, triggers at depth 2 and 4
  cfg.seed = 4;
  Environment env(cfg, basis_state(2, 3));  // |11>
  TwoStageHook hook;
  env.set_two_stage(true);
  env.set_refinement_hook(&hook);
  env.reset();
  env.step({3, 0, 1, 0.5});                        // CNOT, no rotations yet
  env.step({3, 0, 1, 0.5});                        // depth 2: refine (vacuous)
  CHECK(hook.refinement_count() == 1);
  env.step({0, 0, 0, 0.5});                        // Rx placeholder on qubit 0
  const StepResult last = env.step({0, 1, 0, 0.5});  // depth 4: final refinement
  CHECK(hook.refinement_count() == 2);
  CHECK(last.terminated);
  CHECK(last.info.fidelity >= 0.99);
}

TEST_CASE("ansatz circuit layout and parameter count") {
  const AnsatzSpec spec{2, 2};
  CHECK(spec.param_count() == 8);
  const Circuit c = ansatz_circuit(spec, std::vector<double>(8, 0.0));
  REQUIRE(c.gate_count() == 10);  // (2 Ry + 2 Rz + 1 CNOT) x 2 layers
  CHECK(c.gates[0].kind == GateKind::Ry);
  CHECK(c.gates[2].kind == GateKind::Rz);
  CHECK(c.gates[4].kind == GateKind::Cnot);
  CHECK_THROWS_AS(ansatz_circuit(spec, std::vector<double>(7, 0.0)),
                  std::invalid_argument);
}

TEST_CASE("baseline: zero-initialized ansatz already prepares |00>") {
  std::vector<TargetSpec> targets;
  targets.push_back(TargetSpec{basis_state(2, 0), Circuit(2), 2});
  BaselineOptions opts;
  opts.steps = 0;
  opts.zero_init = true;
  Rng rng(1);
  const BaselineReport report = classical_baseline(targets, opts, rng);
  REQUIRE(report.entries.size() == 1);
  CHECK(report.entries[0].initial_fidelity == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report.entries[0].final_fidelity == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report.entries[0].steps_used == 0);
}

TEST_CASE("baseline: zero steps reports the initial fidelities") {
  Rng gen(9);
  EnvConfig cfg;
  cfg.n = 2;
  cfg.lambda = 2;
  cfg.seed = 9;
  std::vector<TargetSpec> targets;
  for (int i = 0; i < 4; ++i) targets.push_back(generate_target(cfg, gen));
  BaselineOptions opts;
  opts.steps = 0;
  Rng rng(2);
  const BaselineReport report = classical_baseline(targets, opts, rng);
  for (const BaselineEntry& e : report.entries)
    CHECK(e.initial_fidelity == e.final_fidelity);
}

TEST_CASE("baseline runs are seed-reproducible") {
  Rng gen(9);
  EnvConfig cfg;
  cfg.n = 2;
  cfg.lambda = 2;
  cfg.seed = 9;
  std::vector<TargetSpec> targets;
  for (int i = 0; i < 3; ++i) targets.push_back(generate_target(cfg, gen));
  BaselineOptions opts;
  opts.steps = 25;
  Rng rng_a(7), rng_b(7);
  const BaselineReport a = classical_baseline(targets, opts, rng_a);
  const BaselineReport b = classical_baseline(targets, opts, rng_b);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].final_fidelity == b.entries[i].final_fidelity);
    CHECK(a.entries[i].seed == b.entries[i].seed);
  }
  CHECK(a.mean_final == b.mean_final);
  CHECK(a.min_final == b.min_final);
}
