#include "qsynth/shift_rule.hpp"

#include <cmath>
#include <stdexcept>

namespace qsynth {

namespace {

double fidelity_with_angle(Circuit c, const StateVector& target,
                           std::size_t gate_index, double angle) {
  c.gates[gate_index].angle = angle;
  return fidelity(run_circuit(c), target);
}

}  // namespace

double shift_gradient(const Circuit& c, const StateVector& target,
                      std::size_t gate_index) {
  if (gate_index >= c.gates.size())
    throw std::invalid_argument("shift_gradient: gate index out of range");
  if (!is_rotation(c.gates[gate_index].kind))
    throw std::invalid_argument("shift_gradient: gate is not a rotation");
  const double theta = c.gates[gate_index].angle;
  const double half_pi = M_PI / 2.0;
  const double plus = fidelity_with_angle(c, target, gate_index, theta + half_pi);
  const double minus = fidelity_with_angle(c, target, gate_index, theta - half_pi);
  return (plus - minus) / 2.0;
}

std::vector<double> fidelity_gradient(const Circuit& c, const StateVector& target) {
  std::vector<double> grad;
  for (std::size_t i = 0; i < c.gates.size(); ++i) {
    if (is_rotation(c.gates[i].kind)) grad.push_back(shift_gradient(c, target, i));
  }
  return grad;
}

}  // namespace qsynth
