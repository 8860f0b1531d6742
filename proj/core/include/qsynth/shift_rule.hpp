#pragma once

#include <cstddef>
#include <vector>

#include "qsynth/statevector.hpp"

namespace qsynth {

// dF/d(theta) of fidelity(run_circuit(c), target) with respect to the angle
// of the rotation at gate_index, evaluated exactly from two shifted runs:
//   [F(theta + pi/2) - F(theta - pi/2)] / 2.
// Throws std::invalid_argument if the gate is not a rotation.
double shift_gradient(const Circuit& c, const StateVector& target,
                      std::size_t gate_index);

// shift_gradient for every rotation gate, in circuit order. Length equals
// the rotation-gate count.
std::vector<double> fidelity_gradient(const Circuit& c, const StateVector& target);

}  // namespace qsynth
