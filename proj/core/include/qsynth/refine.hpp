#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qsynth/circuit.hpp"
#include "qsynth/env.hpp"
#include "qsynth/rng.hpp"
#include "qsynth/statevector.hpp"

namespace qsynth {

struct RefineOptions {
  int max_steps = 300;
  double lr = 0.1;
  double tol = 1e-7;      // stop after 10 consecutive steps with |dC| < tol
  double epsilon = 1e-3;  // stop once 1 - F <= epsilon. At the default lr the
                          // stop window is wider than one Adam step, so the
                          // ascent lands in it before the constant-lr orbit
                          // around the optimum begins. Episode hooks pass the
                          // environment threshold instead.
};

struct RefineResult {
  Circuit circuit;             // best-fidelity iterate, angles wrapped to [-pi, pi]
  std::vector<double> trace;   // fidelity before optimization, then one entry per step
  double final_fidelity = 0.0; // fidelity of the returned circuit
  int steps_used = 0;
};

// Gradient ascent on fidelity over the rotation angles (Adam on the cost
// 1 - F with parameter-shift gradients); the discrete structure is frozen.
// Circuits without rotation gates are returned unchanged.
RefineResult refine_angles(const Circuit& c, const StateVector& target,
                           const RefineOptions& opts = {});

// Two-stage trigger: refines when half the depth budget is reached with the
// SFE threshold unmet, and again at episode end. Installed into an
// Environment running in two-stage mode.
class TwoStageHook : public RefinementHook {
 public:
  explicit TwoStageHook(RefineOptions opts = {}) : opts_(opts) {}

  std::optional<double> on_step(Circuit& circuit, const StateVector& target,
                                int depth, int budget, double current_fidelity,
                                double epsilon) override;

  long refinement_count() const { return refinements_; }

 private:
  RefineOptions opts_;
  long refinements_ = 0;
};

// Two-layer hardware-efficient ansatz: per layer Ry(t) then Rz(t) on every
// qubit followed by a CNOT ladder (control i -> target i+1). Angle layout is
// layer-major: [layer0 Ry angles, layer0 Rz angles, layer1 ...].
struct AnsatzSpec {
  int n = 2;
  int layers = 2;
  int param_count() const { return 2 * layers * n; }
};

Circuit ansatz_circuit(const AnsatzSpec& spec, std::span<const double> angles);

struct BaselineEntry {
  int target_id = 0;
  std::uint64_t seed = 0;
  double initial_fidelity = 0.0;
  double final_fidelity = 0.0;
  int steps_used = 0;
};

struct BaselineReport {
  std::vector<BaselineEntry> entries;
  double mean_final = 0.0;
  double min_final = 0.0;
};

struct BaselineOptions {
  int steps = 300;
  double lr = 0.1;
  bool zero_init = false;  // angles start at 0 instead of uniform [-pi, pi]
};

// Classical variational baseline: fits the two-layer ansatz to each target
// with Adam and parameter-shift gradients. All targets must share n.
BaselineReport classical_baseline(const std::vector<TargetSpec>& targets,
                                  const BaselineOptions& opts, Rng& rng);

}  // namespace qsynth
