#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "qsynth/env.hpp"
#include "support/test_oracles.hpp"

using namespace qsynth;
namespace oracle = qsynth::testing;

namespace {

EnvConfig make_cfg(int n, int lambda, std::uint64_t seed) {
  EnvConfig cfg;
  cfg.n = n;
  cfg.lambda = lambda;
  cfg.seed = seed;
  return cfg;
}

StateVector basis_state(int n, std::size_t index) {
  StateVector s = zero_state(n);
  s.amps[0] = 0.0;
  s.amps[index] = 1.0;
  return s;
}

}  // namespace

TEST_CASE("env config validation") {
  CHECK_THROWS_AS(make_cfg(1, 1, 0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(make_cfg(2, 0, 0).validate(), std::invalid_argument);
  EnvConfig bad = make_cfg(2, 1, 0);
  bad.epsilon = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK(make_cfg(2, 3, 0).depth_budget() == 6);
}

TEST_CASE("generate_target draws exactly lambda gates") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    for (int lambda : {1, 2, 3}) {
      Rng rng(seed);
      const TargetSpec t = generate_target(make_cfg(2, lambda, seed), rng);
      CHECK(t.reference.gate_count() == static_cast<std::size_t>(lambda));
      CHECK(t.lambda == lambda);
      // reconstructible from its own reference circuit
      CHECK(fidelity(run_circuit(t.reference), t.state) ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("generate_target is deterministic in the seed") {
  for (std::uint64_t seed : {3ULL, 77ULL, 1234567ULL}) {
    Rng a(seed), b(seed);
    const TargetSpec ta = generate_target(make_cfg(3, 3, seed), a);
    const TargetSpec tb = generate_target(make_cfg(3, 3, seed), b);
    REQUIRE(ta.reference.gate_count() == tb.reference.gate_count());
    for (std::size_t i = 0; i < ta.reference.gates.size(); ++i) {
      CHECK(ta.reference.gates[i].kind == tb.reference.gates[i].kind);
      CHECK(ta.reference.gates[i].q1 == tb.reference.gates[i].q1);
      CHECK(ta.reference.gates[i].q2 == tb.reference.gates[i].q2);
      CHECK(ta.reference.gates[i].angle == tb.reference.gates[i].angle);
    }
  }
}

TEST_CASE("overlap rejection keeps targets away from visited states") {
  // From |0..0> a diagonal gate (Rz) or CNOT leaves the state at fidelity 1,
  // so a lambda=1 reference can only start with Rx or Ry, and every target
  // stays below the 0.9 overlap bound against |0..0>.
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    const TargetSpec t = generate_target(make_cfg(2, 1, seed), rng);
    const GateKind first = t.reference.gates[0].kind;
    CHECK((first == GateKind::Rx || first == GateKind::Ry));
    CHECK(fidelity(t.state, zero_state(2)) <= 0.9 + 1e-12);
  }
}

TEST_CASE("encode_observation layout") {
  StateVector zero1 = zero_state(1);
  const Observation obs = encode_observation(zero1, basis_state(1, 1));
  CHECK(obs == Observation{1, 0, 0, 0, 0, 1, 0, 0});

  StateVector imag(zero_state(1));
  imag.amps = {cplx{0, 0}, cplx{0, 1}};
  const Observation obs2 = encode_observation(imag, basis_state(1, 0));
  CHECK(obs2 == Observation{0, 0, 0, 1, 1, 0, 0, 0});

  Rng rng(5);
  const Observation obs3 =
      encode_observation(oracle::random_state(3, rng), oracle::random_state(3, rng));
  CHECK(obs3.size() == 32);

  CHECK_THROWS_AS(encode_observation(zero_state(2), zero_state(3)),
                  std::invalid_argument);
}

TEST_CASE("decode_action angle map and validation") {
  const GateInstr mid = decode_action({0, 0, 0, 0.5}, 2);
  CHECK(mid.kind == GateKind::Rx);
  CHECK(mid.angle == 0.0);

  const GateInstr top = decode_action({1, 1, 0, 1.0}, 2);
  CHECK(top.kind == GateKind::Ry);
  CHECK(top.q1 == 1);
  CHECK(top.angle == doctest::Approx(M_PI).epsilon(1e-15));

  const GateInstr bottom = decode_action({2, 0, 0, 0.0}, 2);
  CHECK(bottom.angle == doctest::Approx(-M_PI).epsilon(1e-15));

  const GateInstr cn = decode_action({3, 0, 1, 0.7}, 2);
  CHECK(cn.kind == GateKind::Cnot);
  CHECK(cn.q1 == 0);
  CHECK(cn.q2 == 1);

  CHECK_THROWS_AS(decode_action({3, 1, 1, 0.5}, 2), std::invalid_argument);
  CHECK_THROWS_AS(decode_action({0, 2, 0, 0.5}, 2), std::invalid_argument);
  CHECK_THROWS_AS(decode_action({5, 0, 0, 0.5}, 2), std::invalid_argument);
}

TEST_CASE("rcd arithmetic") {
  CHECK(rcd(2, 2) == 100.0);
  CHECK(rcd(4, 2) == 200.0);
  CHECK(rcd(1, 2) == 50.0);
}

TEST_CASE("reset contract") {
  Environment env(make_cfg(2, 2, 99));
  const ResetResult r = env.reset();
  CHECK(r.fidelity ==
        doctest::Approx(fidelity(zero_state(2), env.target().state)).epsilon(1e-15));
  // first two blocks encode |00>
  CHECK(r.obs[0] == 1.0);
  for (int i = 1; i < 8; ++i) CHECK(r.obs[i] == 0.0);

  Environment env2(make_cfg(2, 2, 99));
  CHECK(env2.reset().obs == r.obs);
}

TEST_CASE("step on an already-satisfied fixed target") {
  Environment env(make_cfg(2, 1, 5), basis_state(2, 0));  // target |00>
  env.reset();
  const StepResult sr = env.step({2, 0, 0, 0.83});  // Rz leaves |00> invariant
  CHECK(sr.terminated);
  CHECK_FALSE(sr.truncated);
  CHECK(sr.reward == doctest::Approx(1.0).epsilon(1e-12));  // 0 dF + bonus
  CHECK(sr.info.fidelity == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(env.step({2, 0, 0, 0.5}), std::logic_error);
}

TEST_CASE("step reward on a one-gate solution") {
  // target |01> (qubit 0 set); Rx(pi) on qubit 0 flips |00> onto it
  Environment env(make_cfg(2, 1, 5), basis_state(2, 1));
  env.reset();
  const StepResult sr = env.step({0, 0, 0, 1.0});
  CHECK(sr.terminated);
  CHECK(sr.reward == doctest::Approx(2.0).epsilon(1e-12));  // dF 1.0 + bonus 1.0
}

TEST_CASE("budget exhaustion truncates") {
  Environment env(make_cfg(2, 1, 17), basis_state(2, 3));  // L = 2, target |11>
  env.reset();
  const StepResult first = env.step({2, 0, 0, 0.5});  // Rz: no progress
  CHECK_FALSE(first.terminated);
  CHECK_FALSE(first.truncated);
  const StepResult second = env.step({2, 1, 0, 0.5});
  CHECK_FALSE(second.terminated);
  CHECK(second.truncated);
  CHECK(second.info.depth == 2);
  CHECK_FALSE(env.episode_active());
}

TEST_CASE("terminated wins when sfe is met exactly at the budget") {
  Environment env(make_cfg(2, 1, 3), basis_state(2, 1));  // L = 2
  env.reset();
  env.step({2, 0, 0, 0.5});                           // waste one step
  const StepResult sr = env.step({0, 0, 0, 1.0});     // solve at depth L
  CHECK(sr.terminated);
  CHECK_FALSE(sr.truncated);
}

TEST_CASE("telescoping reward identity over random episodes") {
  Rng action_rng(2024);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Environment env(make_cfg(2, 2, seed));
    const ResetResult reset = env.reset();
    const double f0 = reset.fidelity;
    double reward_sum = 0.0;
    bool terminated = false;
    double f_final = f0;
    int steps = 0;
    while (env.episode_active()) {
      AgentAction a;
      a.gate = action_rng.uniform_int(4);
      a.q1 = action_rng.uniform_int(2);
      a.q2 = a.gate == 3 ? (a.q1 + 1) % 2 : 0;
      a.theta_unit = action_rng.uniform();
      const StepResult sr = env.step(a);
      reward_sum += sr.reward;
      terminated = sr.terminated;
      f_final = sr.info.fidelity;
      ++steps;
    }
    CHECK(steps <= env.config().depth_budget());
    const double bonus = terminated ? env.config().terminal_bonus : 0.0;
    CHECK(std::abs((reward_sum - bonus) - (f_final - f0)) < 1e-9);
  }
}

TEST_CASE("observation round-trip recovers the target amplitudes") {
  Environment env(make_cfg(3, 2, 8));
  const ResetResult r = env.reset();
  const std::size_t d = 8;
  for (std::size_t i = 0; i < d; ++i) {
    const cplx expected = env.target().state.amps[i];
    CHECK(r.obs[2 * d + i] == expected.real());
    CHECK(r.obs[3 * d + i] == expected.imag());
  }
}

TEST_CASE("fixed target pool cycles per reset") {
  std::vector<StateVector> pool = {basis_state(2, 1), basis_state(2, 2)};
  Environment env(make_cfg(2, 1, 0), pool);
  env.reset();
  CHECK(fidelity(env.target().state, pool[0]) == doctest::Approx(1.0));
  env.step({0, 0, 0, 1.0});
  env.reset();
  CHECK(fidelity(env.target().state, pool[1]) == doctest::Approx(1.0));
}

TEST_CASE("target corpus round-trips") {
  Rng rng(55);
  std::vector<TargetSpec> targets;
  EnvConfig cfg = make_cfg(2, 2, 55);
  for (int i = 0; i < 3; ++i) targets.push_back(generate_target(cfg, rng));

  std::stringstream ss;
  write_target_corpus(ss, targets, cfg.seed);
  const std::vector<TargetSpec> back = read_target_corpus(ss);
  REQUIRE(back.size() == targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    CHECK(back[i].lambda == targets[i].lambda);
    CHECK(fidelity(back[i].state, targets[i].state) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}
