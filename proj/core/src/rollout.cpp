#include "qsynth/rollout.hpp"

namespace qsynth {

RolloutBuffer collect_rollouts(const PolicyNet& policy, std::vector<EnvSlot>& slots,
                               int horizon, const EpisodeSink& sink) {
  RolloutBuffer buffer;
  buffer.env_count = static_cast<int>(slots.size());
  buffer.horizon = horizon;
  buffer.per_env.resize(slots.size());
  for (auto& v : buffer.per_env) v.reserve(horizon);

  for (int t = 0; t < horizon; ++t) {
    for (std::size_t e = 0; e < slots.size(); ++e) {
      EnvSlot& slot = slots[e];
      const SampledAction sampled = policy.sample(slot.obs, slot.action_rng);
      const StepResult sr = slot.env.step(sampled.action);

      StepRecord rec;
      rec.obs = slot.obs;
      rec.action = sampled.action;
      rec.log_prob = sampled.log_prob;
      rec.reward = sr.reward;
      rec.value = sampled.value;
      rec.terminated = sr.terminated;
      rec.truncated = sr.truncated;
      ++slot.episode_len;

      if (sr.terminated || sr.truncated) {
        rec.next_value = sr.terminated ? 0.0 : policy.forward(sr.obs).value;
        if (sink) {
          EpisodeStats stats;
          stats.final_fidelity = sr.info.fidelity;
          stats.success = sr.terminated;
          stats.length = slot.episode_len;
          stats.rcd_percent = rcd(slot.env.circuit().gate_count(),
                                  slot.env.config().lambda);
          sink(stats);
        }
        slot.obs = slot.env.reset().obs;
        slot.episode_len = 0;
      } else {
        slot.obs = sr.obs;
      }
      buffer.per_env[e].push_back(std::move(rec));
    }
  }

  // Fill V(s_{t+1}) for the records that did not end an episode.
  for (std::size_t e = 0; e < slots.size(); ++e) {
    auto& recs = buffer.per_env[e];
    for (int t = horizon - 1; t >= 0; --t) {
      StepRecord& rec = recs[t];
      if (rec.terminated || rec.truncated) continue;
      rec.next_value = (t == horizon - 1) ? policy.forward(slots[e].obs).value
                                          : recs[t + 1].value;
    }
  }
  return buffer;
}

std::pair<std::vector<double>, std::vector<double>> compute_gae(
    const RolloutBuffer& buffer, double gamma, double gae_lambda) {
  std::vector<double> advantages(buffer.size(), 0.0);
  std::vector<double> returns(buffer.size(), 0.0);
  for (int e = 0; e < buffer.env_count; ++e) {
    double next_adv = 0.0;
    for (int t = buffer.horizon - 1; t >= 0; --t) {
      const StepRecord& rec = buffer.per_env[e][t];
      const double non_terminal = rec.terminated ? 0.0 : 1.0;
      const double done = (rec.terminated || rec.truncated) ? 0.0 : 1.0;
      const double delta =
          rec.reward + gamma * rec.next_value * non_terminal - rec.value;
      const double adv = delta + gamma * gae_lambda * done * next_adv;
      const std::size_t flat = static_cast<std::size_t>(e) * buffer.horizon + t;
      advantages[flat] = adv;
      returns[flat] = adv + rec.value;
      next_adv = adv;
    }
  }
  return {std::move(advantages), std::move(returns)};
}

}  // namespace qsynth
