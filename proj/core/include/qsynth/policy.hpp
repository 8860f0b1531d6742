#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "qsynth/env.hpp"
#include "qsynth/rng.hpp"

namespace qsynth {

// Head outputs of one forward pass.
struct PolicyHeads {
  std::vector<double> gate_logits;  // 4
  std::vector<double> q1_logits;    // n
  std::vector<double> q2_logits;    // n
  double angle_mean = 0.0;
  double angle_log_std = 0.0;  // clamped parameter value
  double value = 0.0;
};

struct SampledAction {
  AgentAction action;
  double log_prob = 0.0;
  double value = 0.0;
  double entropy = 0.0;
};

struct ActionEvaluation {
  double log_prob = 0.0;
  double entropy = 0.0;
  double value = 0.0;
};

// Actor-critic MLP over the 4*2^n observation: a shared 2-layer tanh trunk
// with categorical gate/q1/q2 heads, a Gaussian angle head squashed through
// a sigmoid onto [0,1], and a scalar value head. The angle log-std is a
// single state-independent parameter. All parameters live in one flat
// vector so the optimizer, checkpointing and finite-difference checks can
// treat the network as a plain coordinate vector.
//
// In discrete-only mode (two-stage training) the angle head contributes
// nothing to sampling, densities, entropies or gradients.
class PolicyNet {
 public:
  PolicyNet(int n, std::uint64_t seed, int hidden = 64, bool discrete_only = false);

  int qubits() const { return n_; }
  int obs_dim() const { return obs_dim_; }
  int hidden() const { return hidden_; }
  bool discrete_only() const { return discrete_only_; }

  std::size_t param_count() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  PolicyHeads forward(std::span<const double> obs) const;

  // Draw order is fixed (gate, q1, then q2 or angle) so a given RNG stream
  // always yields the same action. The rotation log-density includes the
  // sigmoid change-of-variables term -log(u(1-u)).
  SampledAction sample(std::span<const double> obs, Rng& rng) const;

  // Density, entropy and value this policy assigns to a given action;
  // theta_unit is clamped to [1e-6, 1-1e-6] before the inverse sigmoid.
  ActionEvaluation evaluate(std::span<const double> obs, const AgentAction& a) const;

  // Accumulates into grad the gradient of
  //   c_logp * log_prob(a|obs) + c_value * value(obs) + c_entropy * entropy
  // with respect to the flat parameter vector. grad must have param_count()
  // entries.
  void backward(std::span<const double> obs, const AgentAction& a, double c_logp,
                double c_value, double c_entropy, std::vector<double>& grad) const;

  // Argmax over categorical heads, mean angle.
  AgentAction deterministic_action(std::span<const double> obs) const;

  void save(std::ostream& os) const;
  static PolicyNet load(std::istream& is);

  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;

 private:
  struct Trace;
  PolicyNet(int n, int hidden, bool discrete_only);  // uninitialized params

  Trace run_trunk(std::span<const double> obs) const;
  void init_params(Rng& rng);

  int n_;
  int obs_dim_;
  int hidden_;
  bool discrete_only_;
  std::vector<double> params_;

  // flat-layout offsets
  std::size_t w1_, b1_, w2_, b2_;
  std::size_t wg_, bg_, wq1_, bq1_, wq2_, bq2_;
  std::size_t wmu_, bmu_, wv_, bv_, log_std_;
  void compute_offsets();
};

}  // namespace qsynth
