#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qsynth {

// Gate universe. The RL policy only ever emits the first four kinds; the
// Clifford+T set {H, S, T, I} is supported by the simulator for manually
// written circuits.
enum class GateKind : std::uint8_t { Rx, Ry, Rz, Cnot, H, S, T, I };

bool is_rotation(GateKind k);
std::string_view gate_name(GateKind k);
std::optional<GateKind> gate_from_name(std::string_view name);

// One gate application. Rotation kinds carry an angle in radians; CNOT
// carries a control (q1) and target (q2). Everything else is a single
// target qubit q1.
struct GateInstr {
  GateKind kind = GateKind::I;
  int q1 = 0;            // target qubit (control for CNOT)
  int q2 = -1;           // CNOT target, unused otherwise
  double angle = 0.0;    // rotation angle, unused otherwise

  static GateInstr rotation(GateKind kind, int qubit, double angle);
  static GateInstr cnot(int control, int target);
  static GateInstr clifford(GateKind kind, int qubit);
};

// Ordered gate sequence on n qubits. Depth is counted as total gate count.
struct Circuit {
  int n = 1;
  std::vector<GateInstr> gates;

  Circuit() = default;
  explicit Circuit(int qubits) : n(qubits) {}
  Circuit(int qubits, std::vector<GateInstr> gs) : n(qubits), gates(std::move(gs)) {}

  std::size_t gate_count() const { return gates.size(); }
  std::vector<std::size_t> rotation_indices() const;

  // Throws std::invalid_argument on out-of-range qubits or malformed gates.
  void validate() const;
};

// Line-oriented text form, one gate per line:
//   KIND q1 [q2] [angle_radians_17sigfig]
// e.g. "RY 0 1.5707963267948966" or "CNOT 0 1". Round-trips doubles exactly.
std::string format_gate(const GateInstr& g);
GateInstr parse_gate(std::string_view line);

void write_circuit(std::ostream& os, const Circuit& c);
Circuit read_circuit(std::istream& is, int n, std::size_t gate_count);

}  // namespace qsynth
