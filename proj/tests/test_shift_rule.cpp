#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qsynth/shift_rule.hpp"
#include "support/test_oracles.hpp"

using namespace qsynth;
namespace oracle = qsynth::testing;

namespace {

StateVector one_state() {
  StateVector s = zero_state(1);
  s.amps = {cplx{0, 0}, cplx{1, 0}};
  return s;
}

}  // namespace

TEST_CASE("shift gradient closed form: F(theta) = sin^2(theta/2)") {
  Circuit c(1);
  c.gates = {GateInstr::rotation(GateKind::Rx, 0, M_PI / 3)};
  CHECK(shift_gradient(c, one_state(), 0) ==
        doctest::Approx(std::sin(M_PI / 3) / 2.0).epsilon(1e-12));

  c.gates[0].angle = 0.0;
  CHECK(shift_gradient(c, one_state(), 0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("gradient vanishes at a fidelity maximum") {
  Circuit c(2);
  c.gates = {GateInstr::rotation(GateKind::Ry, 0, 1.234), GateInstr::cnot(0, 1),
             GateInstr::rotation(GateKind::Rz, 1, -0.7)};
  const StateVector target = run_circuit(c);  // F = 1 at the current angles
  for (const std::size_t idx : c.rotation_indices())
    CHECK(std::abs(shift_gradient(c, target, idx)) < 1e-9);
}

TEST_CASE("shift gradient rejects non-rotations") {
  Circuit c(2);
  c.gates = {GateInstr::cnot(0, 1)};
  CHECK_THROWS_AS(shift_gradient(c, zero_state(2), 0), std::invalid_argument);
  CHECK_THROWS_AS(shift_gradient(c, zero_state(2), 5), std::invalid_argument);
}

TEST_CASE("fidelity_gradient shape") {
  Circuit no_rot(2);
  no_rot.gates = {GateInstr::cnot(0, 1), GateInstr::cnot(1, 0)};
  CHECK(fidelity_gradient(no_rot, zero_state(2)).empty());

  Circuit single(1);
  single.gates = {GateInstr::rotation(GateKind::Rx, 0, 0.4)};
  const auto g = fidelity_gradient(single, one_state());
  REQUIRE(g.size() == 1);
  CHECK(g[0] == doctest::Approx(shift_gradient(single, one_state(), 0)).epsilon(1e-15));
}

TEST_CASE("parameter shift matches central finite differences") {
  Rng rng(101);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + rng.uniform_int(4);  // 1..4
    const int gates = 1 + rng.uniform_int(8);
    const Circuit c = oracle::random_circuit(n, gates, rng);
    const StateVector target = oracle::random_state(n, rng);
    const std::vector<double> grad = fidelity_gradient(c, target);
    const std::vector<std::size_t> rot = c.rotation_indices();
    REQUIRE(grad.size() == rot.size());
    for (std::size_t i = 0; i < rot.size(); ++i) {
      const double fd = oracle::finite_diff_gradient(c, target, rot[i]);
      CHECK(std::abs(grad[i] - fd) < 1e-5);
      ++checked;
    }
  }
  CHECK(checked > 200);  // enough rotation gates actually exercised
}
