#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qsynth/config.hpp"
#include "qsynth/env.hpp"
#include "qsynth/refine.hpp"
#include "qsynth/train.hpp"

namespace qsynth {

// Resolved experiment description; every field has a definite value after
// loading so the serialized form replays bit-identically.
struct ExperimentConfig {
  // [experiment]
  std::string mode = "one-stage";  // one-stage | two-stage | a2c | baseline
  int repetitions = 3;
  std::string output_dir = "runs/out";
  int eval_targets = 32;
  std::string eval_corpus_path;
  int eval_episodes = 200;
  std::string target = "random";  // random | basis:<bits> | bell:<phi+|phi-|psi+|psi->
  long eval_every_steps = 16384;
  int checkpoint_every_evals = 0;  // 0 => final checkpoint only

  // [env]
  EnvConfig env;

  // [ppo]  (lr defaults to 5e-4 one-stage, 1e-4 two-stage)
  PpoConfig ppo;

  // [a2c]
  A2cConfig a2c;

  // [refine]
  RefineOptions refine;

  // [baseline]
  int baseline_targets = 10;
  int baseline_steps = 300;
  double baseline_lr = 0.1;

  // [landscape]
  std::vector<int> lambda_list{1, 2};
  std::vector<int> n_list{2};

  static ExperimentConfig from_config(const ConfigFile& file);
  static ExperimentConfig from_file(const std::string& path);

  // Canonical "key = value" text; parsing it back yields an equal config.
  std::string serialize() const;

  TrainMode train_mode() const;
  // Fixed target states implied by `target`, empty for procedural runs.
  std::vector<StateVector> fixed_target_states() const;
};

// Named state parsing for benchmark targets ("basis:01", "bell:phi+").
// Bitstrings read as |q_{n-1} ... q_1 q_0>.
StateVector parse_target_state(const std::string& name, int n);

std::vector<StateVector> two_qubit_basis_states();
std::vector<StateVector> bell_states();

// FNV-1a 64-bit content hash, hex-encoded; used for manifest entries.
std::string content_hash_hex(const std::string& path);

// Worker cap for sweep parallelism: 1 when deterministic, else
// QSYNTH_THREADS (when set) or the hardware concurrency.
int worker_limit(bool deterministic);

// CLI-level options shared by the commands (flags --config/--seed/--out/
// --deterministic).
struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool deterministic = false;
};

// Exit codes: 0 ok, 2 config error, 3 runtime abort.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

int cmd_train(const CliOptions& opts);
int cmd_bench_reconstruction(const std::string& suite, const CliOptions& opts);
int cmd_landscape(const CliOptions& opts);
int cmd_baseline(const CliOptions& opts);
int cmd_targets_export(const CliOptions& opts, const std::string& out_path, int count);
int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir,
               bool render_svg);

// Library-level entry points used by the commands and tests.

struct RepetitionResult {
  int rep = 0;
  std::uint64_t seed = 0;
  std::vector<EvalPoint> evals;
  double wall_clock_seconds = 0.0;
  long env_steps = 0;
  long refinements = 0;
  std::optional<PolicyNet> policy;
};

// One full training repetition of a resolved config (seed = base + rep).
// When checkpoint_dir is set and checkpoint_every_evals > 0, intermediate
// checkpoints are written there as policy_<rep>_eval<k>.ckpt.
RepetitionResult run_repetition(const ExperimentConfig& cfg, int rep,
                                const std::string& checkpoint_dir = "");

// Metrics CSV schema shared by training runs and the report merger.
extern const char* kMetricsHeader;
std::string format_eval_row(const EvalPoint& p);
std::vector<EvalPoint> read_metrics_csv(const std::string& path);

void write_manifest(const std::string& dir, const std::string& command,
                    const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                    bool deterministic, double wall_clock_seconds);

// Re-resolves the config embedded in a run manifest (criterion: replaying a
// manifest reproduces the metrics CSVs byte for byte).
ExperimentConfig config_from_manifest(const std::string& manifest_path);

}  // namespace qsynth
