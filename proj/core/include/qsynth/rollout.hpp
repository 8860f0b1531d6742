#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "qsynth/env.hpp"
#include "qsynth/policy.hpp"
#include "qsynth/rng.hpp"

namespace qsynth {

// One transition as seen by the learner. next_value carries the bootstrap:
// 0 at terminated boundaries, V(final obs) at truncations, V(s_{t+1})
// otherwise (filled once the next step's value is known).
struct StepRecord {
  Observation obs;
  AgentAction action;
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  double next_value = 0.0;
  bool terminated = false;
  bool truncated = false;
};

struct RolloutBuffer {
  int env_count = 0;
  int horizon = 0;
  std::vector<std::vector<StepRecord>> per_env;  // [env][t]

  std::size_t size() const {
    return static_cast<std::size_t>(env_count) * static_cast<std::size_t>(horizon);
  }
  const StepRecord& at(std::size_t flat) const {
    return per_env[flat / horizon][flat % horizon];
  }
};

struct EpisodeStats {
  double final_fidelity = 0.0;
  bool success = false;
  int length = 0;
  double rcd_percent = 0.0;
};

using EpisodeSink = std::function<void(const EpisodeStats&)>;

// An environment plus the per-env state the collector needs between calls.
struct EnvSlot {
  Environment env;
  Rng action_rng;
  Observation obs;
  int episode_len = 0;

  EnvSlot(Environment e, std::uint64_t action_seed)
      : env(std::move(e)), action_rng(action_seed) {
    obs = env.reset().obs;
  }
};

// Steps every environment `horizon` times under the frozen policy,
// auto-resetting finished episodes and streaming per-episode metrics to the
// sink. Environments are advanced in slot order, so a fixed seed set yields
// a bitwise-identical buffer.
RolloutBuffer collect_rollouts(const PolicyNet& policy, std::vector<EnvSlot>& slots,
                               int horizon, const EpisodeSink& sink = {});

// Generalized advantage estimation over a complete buffer:
//   delta_t = r_t + gamma * V(s_{t+1}) * (1 - terminated_t) - V(s_t)
//   A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
// Returns (advantages, returns) flattened as env-major [e * horizon + t];
// returns = advantages + values.
std::pair<std::vector<double>, std::vector<double>> compute_gae(
    const RolloutBuffer& buffer, double gamma, double gae_lambda);

}  // namespace qsynth
