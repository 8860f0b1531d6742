#include "qsynth/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>
#include <utility>

namespace qsynth {

void PpoConfig::validate() const {
  if (!(clip_ratio > 0.0 && clip_ratio < 1.0))
    throw std::invalid_argument("PpoConfig: clip_ratio must be in (0, 1)");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("PpoConfig: gamma must be in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
    throw std::invalid_argument("PpoConfig: gae_lambda must be in [0, 1]");
  if (lr <= 0.0) throw std::invalid_argument("PpoConfig: lr must be positive");
  if (epochs < 1 || minibatch_size < 1 || horizon < 1 || env_count < 1)
    throw std::invalid_argument("PpoConfig: counts must be positive");
  if (total_steps < 0) throw std::invalid_argument("PpoConfig: total_steps < 0");
}

void A2cConfig::validate() const {
  if (lr <= 0.0) throw std::invalid_argument("A2cConfig: lr must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("A2cConfig: gamma must be in (0, 1]");
  if (n_steps < 1 || env_count < 1)
    throw std::invalid_argument("A2cConfig: counts must be positive");
  if (total_steps < 0) throw std::invalid_argument("A2cConfig: total_steps < 0");
}

namespace {

double global_grad_norm(const std::vector<double>& g) {
  double sq = 0.0;
  for (double v : g) sq += v * v;
  return std::sqrt(sq);
}

void clip_global_norm(std::vector<double>& g, double max_norm) {
  if (max_norm <= 0.0) return;
  const double norm = global_grad_norm(g);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& v : g) v *= scale;
  }
}

void fisher_yates(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng.uniform_int(static_cast<int>(i))]);
}

}  // namespace

UpdateStats ppo_update(PolicyNet& policy, const RolloutBuffer& buffer,
                       const PpoConfig& cfg, AdamState& adam, Rng& shuffle_rng) {
  cfg.validate();
  const RolloutBuffer* buf = &buffer;
  RolloutBuffer scaled;
  if (cfg.normalize_rewards) {
    scaled = buffer;
    double sum = 0.0, sum_sq = 0.0;
    const double count = static_cast<double>(scaled.size());
    for (const auto& env_recs : scaled.per_env)
      for (const StepRecord& r : env_recs) {
        sum += r.reward;
        sum_sq += r.reward * r.reward;
      }
    const double mean = sum / count;
    const double sd = std::sqrt(std::max(sum_sq / count - mean * mean, 0.0));
    for (auto& env_recs : scaled.per_env)
      for (StepRecord& r : env_recs) r.reward /= sd + 1e-8;
    buf = &scaled;
  }

  const auto [advantages, returns] = compute_gae(*buf, cfg.gamma, cfg.gae_lambda);
  const std::size_t total = buf->size();
  std::vector<std::size_t> indices(total);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  std::vector<double> grad(policy.param_count(), 0.0);

  UpdateStats agg;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    fisher_yates(indices, shuffle_rng);
    for (std::size_t start = 0; start < total;
         start += static_cast<std::size_t>(cfg.minibatch_size)) {
      const std::size_t end =
          std::min(total, start + static_cast<std::size_t>(cfg.minibatch_size));
      const std::size_t m = end - start;
      const double md = static_cast<double>(m);

      std::vector<double> adv_mb(m);
      for (std::size_t k = 0; k < m; ++k) adv_mb[k] = advantages[indices[start + k]];
      if (cfg.normalize_advantages && m > 1) {
        double mean = 0.0;
        for (double a : adv_mb) mean += a;
        mean /= md;
        double var = 0.0;
        for (double a : adv_mb) var += (a - mean) * (a - mean);
        const double sd = std::sqrt(var / (md - 1.0));
        for (double& a : adv_mb) a = (a - mean) / (sd + 1e-8);
      }

      std::fill(grad.begin(), grad.end(), 0.0);
      double mb_actor = 0.0, mb_value = 0.0, mb_entropy = 0.0, mb_kl = 0.0;
      int mb_clipped = 0;
      for (std::size_t k = 0; k < m; ++k) {
        const StepRecord& rec = buf->at(indices[start + k]);
        const ActionEvaluation ev = policy.evaluate(rec.obs, rec.action);
        const double log_ratio = ev.log_prob - rec.log_prob;
        const double ratio = std::exp(log_ratio);
        const double adv = adv_mb[k];
        const double surr1 = ratio * adv;
        const double surr2 =
            std::clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio) * adv;
        const double vdiff = ev.value - returns[indices[start + k]];

        mb_actor -= std::min(surr1, surr2);
        mb_value += vdiff * vdiff;
        mb_entropy += ev.entropy;
        mb_kl += (ratio - 1.0) - log_ratio;
        if (std::abs(ratio - 1.0) > cfg.clip_ratio) ++mb_clipped;

        const double c_logp = (surr1 <= surr2 ? -ratio * adv : 0.0) / md;
        const double c_value = cfg.value_coef * 2.0 * vdiff / md;
        const double c_entropy = -cfg.entropy_coef / md;
        policy.backward(rec.obs, rec.action, c_logp, c_value, c_entropy, grad);
      }

      const double loss = mb_actor / md + cfg.value_coef * mb_value / md -
                          cfg.entropy_coef * mb_entropy / md;
      if (!std::isfinite(loss)) throw TrainError("ppo_update: non-finite loss");
      const double norm = global_grad_norm(grad);
      clip_global_norm(grad, cfg.max_grad_norm);
      adam_step(adam, policy.params(), grad);

      agg.actor_loss += mb_actor / md;
      agg.value_loss += mb_value / md;
      agg.entropy += mb_entropy / md;
      agg.approx_kl += mb_kl / md;
      agg.clip_fraction += static_cast<double>(mb_clipped) / md;
      agg.grad_norm += norm;
      ++agg.minibatches;
    }
  }
  if (agg.minibatches > 0) {
    const double mb = agg.minibatches;
    agg.actor_loss /= mb;
    agg.value_loss /= mb;
    agg.entropy /= mb;
    agg.approx_kl /= mb;
    agg.clip_fraction /= mb;
    agg.grad_norm /= mb;
  }
  return agg;
}

UpdateStats a2c_update(PolicyNet& policy, const RolloutBuffer& buffer,
                       const A2cConfig& cfg, AdamState& adam) {
  cfg.validate();
  const auto [advantages, returns] = compute_gae(buffer, cfg.gamma, 1.0);
  const std::size_t m = buffer.size();
  const double md = static_cast<double>(m);
  std::vector<double> grad(policy.param_count(), 0.0);

  UpdateStats stats;
  for (std::size_t k = 0; k < m; ++k) {
    const StepRecord& rec = buffer.at(k);
    const ActionEvaluation ev = policy.evaluate(rec.obs, rec.action);
    const double adv = advantages[k];
    const double vdiff = ev.value - returns[k];
    stats.actor_loss -= ev.log_prob * adv;
    stats.value_loss += vdiff * vdiff;
    stats.entropy += ev.entropy;
    policy.backward(rec.obs, rec.action, -adv / md,
                    cfg.value_coef * 2.0 * vdiff / md, -cfg.entropy_coef / md, grad);
  }
  stats.actor_loss /= md;
  stats.value_loss /= md;
  stats.entropy /= md;
  const double loss = stats.actor_loss + cfg.value_coef * stats.value_loss -
                      cfg.entropy_coef * stats.entropy;
  if (!std::isfinite(loss)) throw TrainError("a2c_update: non-finite loss");
  stats.grad_norm = global_grad_norm(grad);
  clip_global_norm(grad, cfg.max_grad_norm);
  adam_step(adam, policy.params(), grad);
  stats.minibatches = 1;
  return stats;
}

namespace {

Environment make_env(const EnvSetup& setup, std::uint64_t seed) {
  EnvConfig cfg = setup.cfg;
  cfg.seed = seed;
  if (setup.fixed_targets.empty()) return Environment(cfg);
  return Environment(cfg, setup.fixed_targets);
}

struct EpisodeAverages {
  double fidelity = 0.0;
  double success = 0.0;
  double rcd = 0.0;
  double length = 0.0;
  long count = 0;

  void add(const EpisodeStats& s) {
    fidelity += s.final_fidelity;
    success += s.success ? 1.0 : 0.0;
    rcd += s.rcd_percent;
    length += s.length;
    ++count;
  }
  double mean_fidelity() const { return count ? fidelity / count : 0.0; }
  double success_rate() const { return count ? success / count : 0.0; }
  double mean_rcd() const { return count ? rcd / count : 0.0; }
  double mean_length() const { return count ? length / count : 0.0; }
};

EpisodeStats run_episode(const PolicyNet& policy, Environment& env, Rng* action_rng) {
  Observation obs = env.reset().obs;
  EpisodeStats stats;
  while (env.episode_active()) {
    const AgentAction a = action_rng ? policy.sample(obs, *action_rng).action
                                     : policy.deterministic_action(obs);
    const StepResult sr = env.step(a);
    obs = sr.obs;
    ++stats.length;
    if (sr.terminated || sr.truncated) {
      stats.final_fidelity = sr.info.fidelity;
      stats.success = sr.terminated;
      stats.rcd_percent = rcd(env.circuit().gate_count(), env.config().lambda);
    }
  }
  return stats;
}

}  // namespace

EvalPoint evaluate_policy(const PolicyNet& policy, const EnvSetup& setup,
                          const std::vector<StateVector>& eval_pool, int episodes,
                          std::uint64_t eval_seed, const TrainRun& run, long step) {
  EnvConfig cfg = setup.cfg;
  cfg.seed = eval_seed;
  const bool two_stage = run.mode == TrainMode::TwoStage;

  Environment env = eval_pool.empty() ? Environment(cfg) : Environment(cfg, eval_pool);
  TwoStageHook hook(run.options.refine);
  if (two_stage) {
    env.set_two_stage(true);
    env.set_refinement_hook(&hook);
  }
  Rng action_rng(eval_seed ^ 0x9e3779b97f4a7c15ULL);

  EpisodeAverages stochastic;
  for (int ep = 0; ep < episodes; ++ep)
    stochastic.add(run_episode(policy, env, &action_rng));

  Environment det_env =
      eval_pool.empty() ? Environment(cfg) : Environment(cfg, eval_pool);
  TwoStageHook det_hook(run.options.refine);
  if (two_stage) {
    det_env.set_two_stage(true);
    det_env.set_refinement_hook(&det_hook);
  }
  EpisodeAverages deterministic;
  const int det_episodes =
      eval_pool.empty() ? std::min(episodes, 32)
                        : static_cast<int>(eval_pool.size());
  for (int ep = 0; ep < det_episodes; ++ep)
    deterministic.add(run_episode(policy, det_env, nullptr));

  EvalPoint point;
  point.step = step;
  point.mean_fidelity = stochastic.mean_fidelity();
  point.success_rate = stochastic.success_rate();
  point.mean_rcd = stochastic.mean_rcd();
  point.mean_ep_len = stochastic.mean_length();
  point.seed = run.mode == TrainMode::A2c ? run.a2c.seed : run.ppo.seed;
  point.det_mean_fidelity = deterministic.mean_fidelity();
  point.det_success_rate = deterministic.success_rate();
  return point;
}

TrainResult train(const TrainRun& run) {
  const bool a2c = run.mode == TrainMode::A2c;
  run.env.cfg.validate();
  if (a2c) {
    run.a2c.validate();
  } else {
    run.ppo.validate();
  }

  const std::uint64_t seed = a2c ? run.a2c.seed : run.ppo.seed;
  const int env_count = a2c ? run.a2c.env_count : run.ppo.env_count;
  const int horizon = a2c ? run.a2c.n_steps : run.ppo.horizon;
  const long total_steps = a2c ? run.a2c.total_steps : run.ppo.total_steps;
  const double lr = a2c ? run.a2c.lr : run.ppo.lr;

  // All randomness derives from the master rng in a fixed order.
  Rng master(seed);
  const std::uint64_t policy_seed = master.split();
  std::vector<std::uint64_t> env_seeds(env_count), action_seeds(env_count);
  for (auto& s : env_seeds) s = master.split();
  for (auto& s : action_seeds) s = master.split();
  Rng shuffle_rng(master.split());
  Rng eval_pool_rng(master.split());
  Rng eval_seeder(master.split());

  PolicyNet policy(run.env.cfg.n, policy_seed, run.options.policy_hidden,
                   run.mode == TrainMode::TwoStage);

  std::vector<std::unique_ptr<TwoStageHook>> hooks;
  std::vector<EnvSlot> slots;
  slots.reserve(env_count);
  for (int e = 0; e < env_count; ++e) {
    Environment env = make_env(run.env, env_seeds[e]);
    if (run.mode == TrainMode::TwoStage) {
      hooks.push_back(std::make_unique<TwoStageHook>(run.options.refine));
      env.set_two_stage(true);
      env.set_refinement_hook(hooks.back().get());
    }
    slots.emplace_back(std::move(env), action_seeds[e]);
  }

  std::vector<StateVector> eval_pool;
  if (!run.options.eval_corpus.empty()) {
    for (const TargetSpec& t : run.options.eval_corpus) eval_pool.push_back(t.state);
  } else if (!run.env.fixed_targets.empty()) {
    eval_pool = run.env.fixed_targets;
  } else {
    for (int i = 0; i < run.options.eval_target_count; ++i)
      eval_pool.push_back(generate_target(run.env.cfg, eval_pool_rng).state);
  }

  AdamState adam(policy.param_count(), lr);
  long steps = 0;
  long episodes = 0;
  const EpisodeSink sink = [&episodes](const EpisodeStats&) { ++episodes; };

  std::vector<EvalPoint> evals;
  auto do_eval = [&](long at_step) {
    EvalPoint point = evaluate_policy(policy, run.env, eval_pool,
                                      run.options.eval_episodes,
                                      eval_seeder.split(), run, at_step);
    if (run.options.on_eval) run.options.on_eval(point, policy);
    evals.push_back(point);
  };

  UpdateStats last_update;
  long next_eval = run.options.eval_every_steps;
  while (steps < total_steps) {
    const long remaining = total_steps - steps;
    if (remaining < env_count) break;  // never exceed the step budget
    const int h = static_cast<int>(
        std::min<long>(horizon, remaining / env_count));
    RolloutBuffer buffer = collect_rollouts(policy, slots, h, sink);
    steps += static_cast<long>(buffer.size());
    try {
      last_update = a2c ? a2c_update(policy, buffer, run.a2c, adam)
                        : ppo_update(policy, buffer, run.ppo, adam, shuffle_rng);
    } catch (const TrainError&) {
      if (!run.options.abort_checkpoint_path.empty()) {
        std::ofstream dump(run.options.abort_checkpoint_path);
        policy.save(dump);
      }
      throw;
    }
    if (run.options.eval_every_steps > 0 && steps >= next_eval) {
      do_eval(steps);
      while (next_eval <= steps) next_eval += run.options.eval_every_steps;
    }
  }
  if (total_steps > 0 && (evals.empty() || evals.back().step != steps)) do_eval(steps);

  long refinements = 0;
  for (const auto& h : hooks) refinements += h->refinement_count();

  TrainResult result{std::move(policy), std::move(evals), steps, episodes,
                     refinements, last_update};
  return result;
}

}  // namespace qsynth
