#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qsynth/circuit.hpp"
#include "qsynth/rng.hpp"
#include "qsynth/statevector.hpp"

namespace qsynth {

// Episode configuration. The depth budget is L = 2*lambda; procedurally
// generated targets use exactly lambda gates.
struct EnvConfig {
  int n = 2;                    // qubit count (2..12; CNOT needs two qubits)
  int lambda = 1;               // complexity level, 1..5 in normal use
  double epsilon = 0.01;        // SFE success threshold, episodes end at 1-F <= epsilon
  double terminal_bonus = 1.0;  // added to the shaped reward on success
  double reward_clip = 1.0;     // |dF| <= 1 analytically, so 1.0 makes clipping a no-op
  std::uint64_t seed = 0;

  int depth_budget() const { return 2 * lambda; }
  void validate() const;
};

// A generated target: the state to prepare plus the circuit that produced it.
struct TargetSpec {
  StateVector state;
  Circuit reference;  // empty for fixed (non-procedural) targets
  int lambda = 1;
};

// Real encoding of (current, target): [Re(cur) | Im(cur) | Re(tgt) | Im(tgt)],
// each block of length 2^n, total 4*2^n.
using Observation = std::vector<double>;

// Raw policy decision. gate indexes {Rx, Ry, Rz, CNOT}; theta_unit in [0,1]
// maps to the angle via theta = 2*pi*theta_unit - pi. q2 is consumed only
// for CNOT (control = q1, target = q2), theta_unit only for rotations.
struct AgentAction {
  int gate = 0;
  int q1 = 0;
  int q2 = 0;
  double theta_unit = 0.5;
};

inline constexpr int kAgentGateCount = 4;  // Rx, Ry, Rz, CNOT

GateKind agent_gate_kind(int gate_index);

struct StepInfo {
  double fidelity = 0.0;
  int depth = 0;
  double sfe = 1.0;
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool terminated = false;  // SFE threshold met
  bool truncated = false;   // depth budget exhausted
  StepInfo info;
};

struct ResetResult {
  Observation obs;
  double fidelity = 0.0;  // F(|0...0>, target)
};

// Raised when target generation exhausts its rejection budget; the caller
// is expected to reseed.
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Draws exactly cfg.lambda gates uniformly (kind over {Rx,Ry,Rz,CNOT},
// qubits over valid indices/pairs, angles over [-pi,pi]). A proposed gate is
// rejected and redrawn whenever the resulting intermediate state has
// fidelity > 0.9 with any state already visited in this trajectory,
// including |0...0>. Throws GenerationError after 1000 consecutive
// rejections. Deterministic given the rng stream.
TargetSpec generate_target(const EnvConfig& cfg, Rng& rng);

Observation encode_observation(const StateVector& current, const StateVector& target);

// Validates indices against n and applies the angle map. Throws on invalid
// indices or q1 == q2 for CNOT (the policy masks that; the env still checks).
GateInstr decode_action(const AgentAction& a, int n);

// Reconstructed circuit depth as a percentage of the target gate count.
double rcd(std::size_t synth_gate_count, int lambda);

// Callback slot for two-stage training: invoked after every applied gate
// with the episode state; an implementation may refine the circuit's angles
// in place and return the new fidelity, which replaces the environment's
// fidelity register.
struct RefinementHook {
  virtual ~RefinementHook() = default;
  // depth is the gate count after the current application; budget is L.
  virtual std::optional<double> on_step(Circuit& circuit, const StateVector& target,
                                        int depth, int budget, double current_fidelity,
                                        double epsilon) = 0;
};

// Sequential decision environment. One instance is single-threaded and owns
// its RNG; run several instances for parallel collection.
class Environment {
 public:
  // Procedural targets, regenerated on every reset.
  explicit Environment(const EnvConfig& cfg);
  // Fixed target (benchmark suites); the reference circuit is empty and the
  // config's lambda still sets the depth budget.
  Environment(const EnvConfig& cfg, StateVector fixed_target);
  // Fixed target pool, cycled per reset in order.
  Environment(const EnvConfig& cfg, std::vector<StateVector> target_pool);

  // In two-stage mode rotation actions are applied with placeholder angle 0
  // and the hook owns all continuous structure.
  void set_refinement_hook(RefinementHook* hook) { hook_ = hook; }
  void set_two_stage(bool on) { two_stage_ = on; }

  ResetResult reset();
  StepResult step(const AgentAction& a);

  bool episode_active() const { return active_; }
  const EnvConfig& config() const { return cfg_; }
  const TargetSpec& target() const { return target_; }
  const Circuit& circuit() const { return circuit_; }
  const StateVector& state() const { return current_; }
  double previous_fidelity() const { return prev_fidelity_; }
  int depth() const { return depth_; }

 private:
  Observation observe() const;

  EnvConfig cfg_;
  Rng rng_;
  std::vector<StateVector> fixed_targets_;  // empty => procedural
  std::size_t next_fixed_ = 0;
  TargetSpec target_;
  StateVector current_;
  Circuit circuit_;
  double prev_fidelity_ = 0.0;
  int depth_ = 0;
  bool active_ = false;
  bool two_stage_ = false;
  RefinementHook* hook_ = nullptr;
};

// Target corpus text format: per target a header line "n lambda seed"
// followed by the reference circuit, one blank line between targets.
void write_target_corpus(std::ostream& os, const std::vector<TargetSpec>& targets,
                         std::uint64_t seed);
std::vector<TargetSpec> read_target_corpus(std::istream& is);

}  // namespace qsynth
