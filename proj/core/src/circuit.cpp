#include "qsynth/circuit.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qsynth {

bool is_rotation(GateKind k) {
  return k == GateKind::Rx || k == GateKind::Ry || k == GateKind::Rz;
}

std::string_view gate_name(GateKind k) {
  switch (k) {
    case GateKind::Rx: return "RX";
    case GateKind::Ry: return "RY";
    case GateKind::Rz: return "RZ";
    case GateKind::Cnot: return "CNOT";
    case GateKind::H: return "H";
    case GateKind::S: return "S";
    case GateKind::T: return "T";
    case GateKind::I: return "I";
  }
  return "?";
}

std::optional<GateKind> gate_from_name(std::string_view name) {
  if (name == "RX") return GateKind::Rx;
  if (name == "RY") return GateKind::Ry;
  if (name == "RZ") return GateKind::Rz;
  if (name == "CNOT") return GateKind::Cnot;
  if (name == "H") return GateKind::H;
  if (name == "S") return GateKind::S;
  if (name == "T") return GateKind::T;
  if (name == "I") return GateKind::I;
  return std::nullopt;
}

GateInstr GateInstr::rotation(GateKind kind, int qubit, double angle) {
  if (!is_rotation(kind)) throw std::invalid_argument("rotation(): kind is not a rotation gate");
  return GateInstr{kind, qubit, -1, angle};
}

GateInstr GateInstr::cnot(int control, int target) {
  if (control == target) throw std::invalid_argument("cnot(): control == target");
  return GateInstr{GateKind::Cnot, control, target, 0.0};
}

GateInstr GateInstr::clifford(GateKind kind, int qubit) {
  if (is_rotation(kind) || kind == GateKind::Cnot)
    throw std::invalid_argument("clifford(): expected one of H, S, T, I");
  return GateInstr{kind, qubit, -1, 0.0};
}

std::vector<std::size_t> Circuit::rotation_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < gates.size(); ++i)
    if (is_rotation(gates[i].kind)) idx.push_back(i);
  return idx;
}

void Circuit::validate() const {
  for (const GateInstr& g : gates) {
    if (g.q1 < 0 || g.q1 >= n) throw std::invalid_argument("circuit: qubit index out of range");
    if (g.kind == GateKind::Cnot) {
      if (g.q2 < 0 || g.q2 >= n) throw std::invalid_argument("circuit: CNOT target out of range");
      if (g.q2 == g.q1) throw std::invalid_argument("circuit: CNOT control equals target");
    }
  }
}

std::string format_gate(const GateInstr& g) {
  char buf[64];
  if (g.kind == GateKind::Cnot) {
    std::snprintf(buf, sizeof(buf), "CNOT %d %d", g.q1, g.q2);
  } else if (is_rotation(g.kind)) {
    std::snprintf(buf, sizeof(buf), "%s %d %.17g",
                  std::string(gate_name(g.kind)).c_str(), g.q1, g.angle);
  } else {
    std::snprintf(buf, sizeof(buf), "%s %d",
                  std::string(gate_name(g.kind)).c_str(), g.q1);
  }
  return buf;
}

GateInstr parse_gate(std::string_view line) {
  std::istringstream iss{std::string(line)};
  std::string name;
  if (!(iss >> name)) throw std::invalid_argument("parse_gate: empty line");
  auto kind = gate_from_name(name);
  if (!kind) throw std::invalid_argument("parse_gate: unknown gate '" + name + "'");
  if (*kind == GateKind::Cnot) {
    int c, t;
    if (!(iss >> c >> t)) throw std::invalid_argument("parse_gate: CNOT needs two qubits");
    return GateInstr::cnot(c, t);
  }
  int q;
  if (!(iss >> q)) throw std::invalid_argument("parse_gate: missing qubit index");
  if (is_rotation(*kind)) {
    double angle;
    if (!(iss >> angle)) throw std::invalid_argument("parse_gate: rotation needs an angle");
    return GateInstr::rotation(*kind, q, angle);
  }
  return GateInstr::clifford(*kind, q);
}

void write_circuit(std::ostream& os, const Circuit& c) {
  for (const GateInstr& g : c.gates) os << format_gate(g) << '\n';
}

Circuit read_circuit(std::istream& is, int n, std::size_t gate_count) {
  Circuit c(n);
  c.gates.reserve(gate_count);
  std::string line;
  while (c.gates.size() < gate_count && std::getline(is, line)) {
    if (line.empty()) continue;
    c.gates.push_back(parse_gate(line));
  }
  if (c.gates.size() != gate_count)
    throw std::invalid_argument("read_circuit: truncated input");
  c.validate();
  return c;
}

}  // namespace qsynth
