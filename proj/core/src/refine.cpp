#include "qsynth/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "qsynth/adam.hpp"
#include "qsynth/shift_rule.hpp"

namespace qsynth {

namespace {

double wrap_angle(double a) { return std::remainder(a, 2.0 * M_PI); }

void write_angles(Circuit& c, const std::vector<std::size_t>& rot_idx,
                  std::span<const double> angles) {
  for (std::size_t i = 0; i < rot_idx.size(); ++i) c.gates[rot_idx[i]].angle = angles[i];
}

}  // namespace

RefineResult refine_angles(const Circuit& c, const StateVector& target,
                           const RefineOptions& opts) {
  RefineResult result;
  result.circuit = c;
  const std::vector<std::size_t> rot_idx = c.rotation_indices();
  double f = fidelity(run_circuit(result.circuit), target);
  result.trace.push_back(f);
  result.final_fidelity = f;
  if (rot_idx.empty()) return result;

  std::vector<double> angles(rot_idx.size());
  for (std::size_t i = 0; i < rot_idx.size(); ++i)
    angles[i] = c.gates[rot_idx[i]].angle;

  AdamState adam(angles.size(), opts.lr);
  std::vector<double> best_angles = angles;
  double best_f = f;
  double prev_cost = 1.0 - f;
  int small_steps = 0;

  for (int step = 0; step < opts.max_steps; ++step) {
    if (1.0 - f <= opts.epsilon) break;
    std::vector<double> grad = fidelity_gradient(result.circuit, target);
    for (double& g : grad) g = -g;  // ascend fidelity = descend 1 - F
    adam_step(adam, angles, grad);
    for (double& a : angles) a = wrap_angle(a);
    write_angles(result.circuit, rot_idx, angles);
    f = fidelity(run_circuit(result.circuit), target);
    result.trace.push_back(f);
    if (f > best_f) {
      best_f = f;
      best_angles = angles;
    }
    const double cost = 1.0 - f;
    if (std::abs(cost - prev_cost) < opts.tol) {
      if (++small_steps >= 10) break;
    } else {
      small_steps = 0;
    }
    prev_cost = cost;
  }

  write_angles(result.circuit, rot_idx, best_angles);
  result.final_fidelity = best_f;
  result.steps_used = static_cast<int>(result.trace.size()) - 1;
  return result;
}

std::optional<double> TwoStageHook::on_step(Circuit& circuit, const StateVector& target,
                                            int depth, int budget,
                                            double current_fidelity, double epsilon) {
  const bool at_half = depth == budget / 2;
  const bool at_end = depth == budget;
  if (!at_half && !at_end) return std::nullopt;
  if (1.0 - current_fidelity <= epsilon) return std::nullopt;
  // The placeholder angle 0 sits at an exact critical point of the fidelity
  // (rotations enter through sin/cos of theta/2), where every parameter-shift
  // gradient vanishes. Nudge untouched angles off that point so the
  // optimizer has a direction to follow.
  for (GateInstr& g : circuit.gates) {
    if (is_rotation(g.kind) && g.angle == 0.0) g.angle = 1e-2;
  }
  RefineOptions opts = opts_;
  opts.epsilon = epsilon;
  RefineResult r = refine_angles(circuit, target, opts);
  circuit = std::move(r.circuit);
  ++refinements_;
  return r.final_fidelity;
}

Circuit ansatz_circuit(const AnsatzSpec& spec, std::span<const double> angles) {
  if (spec.n < 2) throw std::invalid_argument("ansatz_circuit: n must be >= 2");
  if (static_cast<int>(angles.size()) != spec.param_count())
    throw std::invalid_argument("ansatz_circuit: angle count mismatch");
  Circuit c(spec.n);
  std::size_t k = 0;
  for (int layer = 0; layer < spec.layers; ++layer) {
    for (int q = 0; q < spec.n; ++q)
      c.gates.push_back(GateInstr::rotation(GateKind::Ry, q, angles[k++]));
    for (int q = 0; q < spec.n; ++q)
      c.gates.push_back(GateInstr::rotation(GateKind::Rz, q, angles[k++]));
    for (int q = 0; q + 1 < spec.n; ++q)
      c.gates.push_back(GateInstr::cnot(q, q + 1));
  }
  return c;
}

BaselineReport classical_baseline(const std::vector<TargetSpec>& targets,
                                  const BaselineOptions& opts, Rng& rng) {
  BaselineReport report;
  if (targets.empty()) return report;
  const int n = targets.front().state.n;
  for (const TargetSpec& t : targets) {
    if (t.state.n != n)
      throw std::invalid_argument("classical_baseline: mixed qubit counts");
  }

  const AnsatzSpec spec{n, 2};
  double sum = 0.0;
  double min_final = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const std::uint64_t seed = rng.split();
    Rng init_rng(seed);
    std::vector<double> angles(spec.param_count(), 0.0);
    if (!opts.zero_init) {
      for (double& a : angles) a = init_rng.uniform(-M_PI, M_PI);
    }
    const Circuit ansatz = ansatz_circuit(spec, angles);
    RefineOptions ropts;
    ropts.max_steps = opts.steps;
    ropts.lr = opts.lr;
    const RefineResult r = refine_angles(ansatz, targets[i].state, ropts);
    BaselineEntry entry;
    entry.target_id = static_cast<int>(i);
    entry.seed = seed;
    entry.initial_fidelity = r.trace.front();
    entry.final_fidelity = r.final_fidelity;
    entry.steps_used = r.steps_used;
    report.entries.push_back(entry);
    sum += r.final_fidelity;
    min_final = std::min(min_final, r.final_fidelity);
  }
  report.mean_final = sum / static_cast<double>(targets.size());
  report.min_final = min_final;
  return report;
}

}  // namespace qsynth
