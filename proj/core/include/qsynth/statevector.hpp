#pragma once

#include <array>
#include <complex>
#include <vector>

#include "qsynth/circuit.hpp"

namespace qsynth {

using cplx = std::complex<double>;

// Qubit ordering is little-endian throughout: qubit 0 is the least
// significant bit of the basis index. Basis index b therefore reads
// b = q_{n-1} ... q_1 q_0 in binary.
//
// Gate conventions (half-angle):
//   Rx(t) = exp(-i t X / 2), Ry(t) = exp(-i t Y / 2),
//   Rz(t) = diag(e^{-it/2}, e^{+it/2}),
// which make the parameter-shift rule exact with shifts of +-pi/2.
struct StateVector {
  int n = 1;
  std::vector<cplx> amps;

  std::size_t dim() const { return amps.size(); }
  double norm_sq() const;
};

inline constexpr int kMaxQubits = 12;

// |0...0> on n qubits. Throws std::invalid_argument outside 1..12.
StateVector zero_state(int n);

using Mat2 = std::array<std::array<cplx, 2>, 2>;
using Mat4 = std::array<std::array<cplx, 4>, 4>;

// 2x2 matrix of a single-qubit kind. Rotation kinds require the angle.
Mat2 single_qubit_matrix(GateKind kind, double angle = 0.0);

// 4x4 CNOT on the two-qubit subspace, basis index = 2*control_bit + target_bit.
Mat4 cnot_matrix();

// Applies one gate in place via stride iteration (no 2^n x 2^n matrices).
void apply_gate(StateVector& state, const GateInstr& g);

// All gates applied to |0...0>.
StateVector run_circuit(const Circuit& c);

// |<a|b>|^2; symmetric and invariant under global phase of either argument.
double fidelity(const StateVector& a, const StateVector& b);

cplx inner_product(const StateVector& a, const StateVector& b);

}  // namespace qsynth
