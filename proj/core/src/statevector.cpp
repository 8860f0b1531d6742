#include "qsynth/statevector.hpp"

#include <cmath>
#include <stdexcept>

namespace qsynth {

namespace {
constexpr cplx kI{0.0, 1.0};
}

double StateVector::norm_sq() const {
  double s = 0.0;
  for (const cplx& a : amps) s += std::norm(a);
  return s;
}

StateVector zero_state(int n) {
  if (n < 1 || n > kMaxQubits)
    throw std::invalid_argument("zero_state: qubit count must be in 1..12");
  StateVector s;
  s.n = n;
  s.amps.assign(std::size_t(1) << n, cplx{0.0, 0.0});
  s.amps[0] = cplx{1.0, 0.0};
  return s;
}

Mat2 single_qubit_matrix(GateKind kind, double angle) {
  const double c = std::cos(angle / 2.0);
  const double s = std::sin(angle / 2.0);
  switch (kind) {
    case GateKind::Rx:
      return {{{cplx{c, 0}, -kI * s}, {-kI * s, cplx{c, 0}}}};
    case GateKind::Ry:
      return {{{cplx{c, 0}, cplx{-s, 0}}, {cplx{s, 0}, cplx{c, 0}}}};
    case GateKind::Rz:
      return {{{std::exp(-kI * (angle / 2.0)), cplx{0, 0}},
               {cplx{0, 0}, std::exp(kI * (angle / 2.0))}}};
    case GateKind::H: {
      const double r = 1.0 / std::sqrt(2.0);
      return {{{cplx{r, 0}, cplx{r, 0}}, {cplx{r, 0}, cplx{-r, 0}}}};
    }
    case GateKind::S:
      return {{{cplx{1, 0}, cplx{0, 0}}, {cplx{0, 0}, kI}}};
    case GateKind::T:
      return {{{cplx{1, 0}, cplx{0, 0}},
               {cplx{0, 0}, std::exp(kI * (M_PI / 4.0))}}};
    case GateKind::I:
      return {{{cplx{1, 0}, cplx{0, 0}}, {cplx{0, 0}, cplx{1, 0}}}};
    case GateKind::Cnot:
      break;
  }
  throw std::invalid_argument("single_qubit_matrix: CNOT is not a single-qubit gate");
}

Mat4 cnot_matrix() {
  Mat4 m{};
  m[0][0] = 1;  // |c=0,t=0>
  m[1][1] = 1;  // |c=0,t=1>
  m[2][3] = 1;  // |c=1,t=1> -> |c=1,t=0>
  m[3][2] = 1;
  return m;
}

namespace {

void apply_single_qubit(StateVector& state, const Mat2& u, int q) {
  const std::size_t stride = std::size_t(1) << q;
  const std::size_t dim = state.dim();
  for (std::size_t base = 0; base < dim; base += 2 * stride) {
    for (std::size_t i = base; i < base + stride; ++i) {
      const cplx a0 = state.amps[i];
      const cplx a1 = state.amps[i + stride];
      state.amps[i] = u[0][0] * a0 + u[0][1] * a1;
      state.amps[i + stride] = u[1][0] * a0 + u[1][1] * a1;
    }
  }
}

void apply_cnot(StateVector& state, int control, int target) {
  const std::size_t cbit = std::size_t(1) << control;
  const std::size_t tbit = std::size_t(1) << target;
  const std::size_t dim = state.dim();
  for (std::size_t i = 0; i < dim; ++i) {
    if ((i & cbit) && !(i & tbit)) std::swap(state.amps[i], state.amps[i | tbit]);
  }
}

}  // namespace

void apply_gate(StateVector& state, const GateInstr& g) {
  if (g.q1 < 0 || g.q1 >= state.n)
    throw std::invalid_argument("apply_gate: qubit index out of range");
  if (g.kind == GateKind::Cnot) {
    if (g.q2 < 0 || g.q2 >= state.n)
      throw std::invalid_argument("apply_gate: CNOT target out of range");
    if (g.q2 == g.q1)
      throw std::invalid_argument("apply_gate: CNOT control equals target");
    apply_cnot(state, g.q1, g.q2);
    return;
  }
  apply_single_qubit(state, single_qubit_matrix(g.kind, g.angle), g.q1);
}

StateVector run_circuit(const Circuit& c) {
  c.validate();
  StateVector state = zero_state(c.n);
  for (const GateInstr& g : c.gates) apply_gate(state, g);
  return state;
}

cplx inner_product(const StateVector& a, const StateVector& b) {
  if (a.n != b.n)
    throw std::invalid_argument("inner_product: dimension mismatch");
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.dim(); ++i) acc += std::conj(a.amps[i]) * b.amps[i];
  return acc;
}

double fidelity(const StateVector& a, const StateVector& b) {
  return std::norm(inner_product(a, b));
}

}  // namespace qsynth
