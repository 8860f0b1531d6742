#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsynth/adam.hpp"
#include "qsynth/env.hpp"
#include "qsynth/policy.hpp"
#include "qsynth/refine.hpp"
#include "qsynth/rollout.hpp"

namespace qsynth {

struct PpoConfig {
  double lr = 5e-4;          // one-stage default; two-stage runs use 1e-4
  double clip_ratio = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int epochs = 4;
  int minibatch_size = 64;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  int horizon = 2048;        // H steps per environment per iteration
  int env_count = 8;
  long total_steps = 200000;
  std::uint64_t seed = 0;
  bool normalize_advantages = true;  // per-minibatch mean 0 / std 1
  bool normalize_rewards = false;    // scale buffer rewards by their std
  double max_grad_norm = 0.5;

  void validate() const;
};

struct A2cConfig {
  double lr = 1e-3;
  double gamma = 0.99;
  int n_steps = 8;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  int env_count = 8;
  long total_steps = 50000;
  std::uint64_t seed = 0;
  double max_grad_norm = 0.5;

  void validate() const;
};

struct UpdateStats {
  double actor_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
  int minibatches = 0;
};

// Raised when an update produces a non-finite loss; train() dumps a
// checkpoint before propagating.
struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Clipped-surrogate PPO epoch sweep over the buffer. Advantages are
// normalized per minibatch (mean 0, std 1, floor 1e-8) when enabled.
UpdateStats ppo_update(PolicyNet& policy, const RolloutBuffer& buffer,
                       const PpoConfig& cfg, AdamState& adam, Rng& shuffle_rng);

// One plain policy-gradient step over the whole buffer: no ratio, no
// clipping, no epochs. Advantages come from GAE at lambda = 1.
UpdateStats a2c_update(PolicyNet& policy, const RolloutBuffer& buffer,
                       const A2cConfig& cfg, AdamState& adam);

enum class TrainMode { OneStage, TwoStage, A2c };

struct EnvSetup {
  EnvConfig cfg;
  std::vector<StateVector> fixed_targets;  // empty => procedural targets
};

struct EvalPoint {
  long step = 0;
  double mean_fidelity = 0.0;
  double success_rate = 0.0;
  double mean_rcd = 0.0;
  double mean_ep_len = 0.0;
  std::uint64_t seed = 0;
  double det_mean_fidelity = 0.0;  // deterministic-mode policy, logged alongside
  double det_success_rate = 0.0;
};

struct TrainOptions {
  long eval_every_steps = 16384;  // 0 => final evaluation only
  int eval_episodes = 200;
  int eval_target_count = 32;    // held-out pool size for procedural targets
  std::vector<TargetSpec> eval_corpus;  // overrides the generated pool
  RefineOptions refine;          // two-stage refinement budget
  int policy_hidden = 64;
  std::string abort_checkpoint_path;  // policy dump target on TrainError
  // Called after every evaluation; used for metric streaming / checkpoints.
  std::function<void(const EvalPoint&, const PolicyNet&)> on_eval;
};

struct TrainRun {
  TrainMode mode = TrainMode::OneStage;
  EnvSetup env;
  PpoConfig ppo;   // OneStage / TwoStage
  A2cConfig a2c;   // A2c
  TrainOptions options;
};

struct TrainResult {
  PolicyNet policy;
  std::vector<EvalPoint> evals;
  long env_steps = 0;
  long episodes = 0;
  long refinements = 0;  // two-stage refinement invocations during training
  UpdateStats last_update;
};

// Alternates rollout collection and updates until total_steps environment
// steps are consumed, evaluating on a fixed held-out target set. Fully
// deterministic for a fixed TrainRun.
TrainResult train(const TrainRun& run);

// Success/fidelity statistics of a policy on a target pool. Success rate is
// measured under the stochastic policy (training conditions); the
// deterministic fields use argmax heads and the mean angle.
EvalPoint evaluate_policy(const PolicyNet& policy, const EnvSetup& setup,
                          const std::vector<StateVector>& eval_pool, int episodes,
                          std::uint64_t eval_seed, const TrainRun& run, long step);

}  // namespace qsynth
