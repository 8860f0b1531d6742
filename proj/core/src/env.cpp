#include "qsynth/env.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>

namespace qsynth {

void EnvConfig::validate() const {
  if (n < 2 || n > kMaxQubits)
    throw std::invalid_argument("EnvConfig: n must be in 2..12");
  if (lambda < 1) throw std::invalid_argument("EnvConfig: lambda must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("EnvConfig: epsilon must be in (0, 1)");
  if (reward_clip <= 0.0)
    throw std::invalid_argument("EnvConfig: reward_clip must be positive");
}

GateKind agent_gate_kind(int gate_index) {
  switch (gate_index) {
    case 0: return GateKind::Rx;
    case 1: return GateKind::Ry;
    case 2: return GateKind::Rz;
    case 3: return GateKind::Cnot;
    default: throw std::invalid_argument("agent_gate_kind: index out of range");
  }
}

namespace {

constexpr double kOverlapRejectAbove = 0.9;  // reject when F > 1 - 0.1
constexpr int kMaxConsecutiveRejections = 1000;
constexpr int kMaxRegenerations = 100;

GateInstr draw_gate(int n, Rng& rng) {
  const int kind_index = rng.uniform_int(kAgentGateCount);
  const GateKind kind = agent_gate_kind(kind_index);
  if (kind == GateKind::Cnot) {
    const int control = rng.uniform_int(n);
    int target = rng.uniform_int(n - 1);
    if (target >= control) ++target;
    return GateInstr::cnot(control, target);
  }
  const int qubit = rng.uniform_int(n);
  const double angle = rng.uniform(-M_PI, M_PI);
  return GateInstr::rotation(kind, qubit, angle);
}

}  // namespace

TargetSpec generate_target(const EnvConfig& cfg, Rng& rng) {
  cfg.validate();
  for (int attempt = 0; attempt < kMaxRegenerations; ++attempt) {
    StateVector current = zero_state(cfg.n);
    std::vector<StateVector> visited;
    visited.push_back(current);
    Circuit reference(cfg.n);
    int rejections = 0;
    while (reference.gates.size() < static_cast<std::size_t>(cfg.lambda)) {
      const GateInstr g = draw_gate(cfg.n, rng);
      StateVector candidate = current;
      apply_gate(candidate, g);
      const bool too_close = std::any_of(
          visited.begin(), visited.end(), [&](const StateVector& v) {
            return fidelity(candidate, v) > kOverlapRejectAbove;
          });
      if (too_close) {
        if (++rejections >= kMaxConsecutiveRejections)
          throw GenerationError("generate_target: 1000 consecutive rejections");
        continue;
      }
      rejections = 0;
      current = std::move(candidate);
      visited.push_back(current);
      reference.gates.push_back(g);
    }
    // The overlap rule already keeps the final state at fidelity <= 0.9 with
    // |0...0>; this guard covers configs with epsilon >= 0.1.
    const double f0 = fidelity(visited.front(), current);
    if (1.0 - f0 <= cfg.epsilon) continue;
    return TargetSpec{std::move(current), std::move(reference), cfg.lambda};
  }
  throw GenerationError("generate_target: trivially satisfied target persisted");
}

Observation encode_observation(const StateVector& current, const StateVector& target) {
  if (current.n != target.n)
    throw std::invalid_argument("encode_observation: dimension mismatch");
  const std::size_t d = current.dim();
  Observation obs(4 * d);
  for (std::size_t i = 0; i < d; ++i) {
    obs[i] = current.amps[i].real();
    obs[d + i] = current.amps[i].imag();
    obs[2 * d + i] = target.amps[i].real();
    obs[3 * d + i] = target.amps[i].imag();
  }
  return obs;
}

GateInstr decode_action(const AgentAction& a, int n) {
  if (a.gate < 0 || a.gate >= kAgentGateCount)
    throw std::invalid_argument("decode_action: gate index out of range");
  if (a.q1 < 0 || a.q1 >= n)
    throw std::invalid_argument("decode_action: q1 out of range");
  const GateKind kind = agent_gate_kind(a.gate);
  if (kind == GateKind::Cnot) {
    if (a.q2 < 0 || a.q2 >= n)
      throw std::invalid_argument("decode_action: q2 out of range");
    if (a.q2 == a.q1)
      throw std::invalid_argument("decode_action: CNOT control equals target");
    return GateInstr::cnot(a.q1, a.q2);
  }
  if (!(a.theta_unit >= 0.0 && a.theta_unit <= 1.0))
    throw std::invalid_argument("decode_action: theta_unit outside [0, 1]");
  return GateInstr::rotation(kind, a.q1, 2.0 * M_PI * a.theta_unit - M_PI);
}

double rcd(std::size_t synth_gate_count, int lambda) {
  return 100.0 * static_cast<double>(synth_gate_count) / static_cast<double>(lambda);
}

Environment::Environment(const EnvConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
  cfg_.validate();
}

Environment::Environment(const EnvConfig& cfg, StateVector fixed_target)
    : Environment(cfg, std::vector<StateVector>{std::move(fixed_target)}) {}

Environment::Environment(const EnvConfig& cfg, std::vector<StateVector> target_pool)
    : cfg_(cfg), rng_(cfg.seed), fixed_targets_(std::move(target_pool)) {
  cfg_.validate();
  for (const StateVector& t : fixed_targets_) {
    if (t.n != cfg_.n)
      throw std::invalid_argument("Environment: fixed target qubit count mismatch");
  }
}

Observation Environment::observe() const {
  return encode_observation(current_, target_.state);
}

ResetResult Environment::reset() {
  if (fixed_targets_.empty()) {
    target_ = generate_target(cfg_, rng_);
  } else {
    target_ = TargetSpec{fixed_targets_[next_fixed_ % fixed_targets_.size()],
                         Circuit(cfg_.n), cfg_.lambda};
    ++next_fixed_;
  }
  current_ = zero_state(cfg_.n);
  circuit_ = Circuit(cfg_.n);
  depth_ = 0;
  prev_fidelity_ = fidelity(current_, target_.state);
  active_ = true;
  return ResetResult{observe(), prev_fidelity_};
}

StepResult Environment::step(const AgentAction& a) {
  if (!active_) throw std::logic_error("Environment::step: episode not active");
  GateInstr g = decode_action(a, cfg_.n);
  if (two_stage_ && is_rotation(g.kind)) g.angle = 0.0;
  apply_gate(current_, g);
  circuit_.gates.push_back(g);
  ++depth_;

  double f = fidelity(current_, target_.state);
  if (two_stage_ && hook_ != nullptr) {
    const auto refined = hook_->on_step(circuit_, target_.state, depth_,
                                        cfg_.depth_budget(), f, cfg_.epsilon);
    if (refined.has_value()) {
      f = *refined;
      current_ = run_circuit(circuit_);
    }
  }

  StepResult result;
  result.reward = std::clamp(f - prev_fidelity_, -cfg_.reward_clip, cfg_.reward_clip);
  result.terminated = (1.0 - f) <= cfg_.epsilon;
  result.truncated = !result.terminated && depth_ >= cfg_.depth_budget();
  if (result.terminated) result.reward += cfg_.terminal_bonus;

  prev_fidelity_ = f;
  if (result.terminated || result.truncated) active_ = false;
  result.obs = observe();
  result.info = StepInfo{f, depth_, 1.0 - f};
  return result;
}

void write_target_corpus(std::ostream& os, const std::vector<TargetSpec>& targets,
                         std::uint64_t seed) {
  for (const TargetSpec& t : targets) {
    os << t.state.n << ' ' << t.lambda << ' ' << seed << '\n';
    write_circuit(os, t.reference);
    os << '\n';
  }
}

std::vector<TargetSpec> read_target_corpus(std::istream& is) {
  std::vector<TargetSpec> targets;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream header(line);
    int n = 0, lambda = 0;
    std::uint64_t seed = 0;
    if (!(header >> n >> lambda >> seed))
      throw std::invalid_argument("read_target_corpus: malformed header");
    Circuit reference = read_circuit(is, n, static_cast<std::size_t>(lambda));
    StateVector state = run_circuit(reference);
    targets.push_back(TargetSpec{std::move(state), std::move(reference), lambda});
  }
  return targets;
}

}  // namespace qsynth
