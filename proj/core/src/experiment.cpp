#include "qsynth/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qsynth/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace qsynth {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Runs fn(0..count-1) on up to `workers` threads; rethrows the first failure.
void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  const int thread_count = std::min(workers, count);
  threads.reserve(thread_count);
  for (int i = 0; i < thread_count; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

ExperimentConfig load_cli_config(const CliOptions& opts) {
  if (opts.config_path.empty()) throw ConfigError("missing --config PATH");
  ExperimentConfig cfg;
  if (opts.config_path.size() > 5 &&
      opts.config_path.substr(opts.config_path.size() - 5) == ".json") {
    cfg = config_from_manifest(opts.config_path);
  } else {
    cfg = ExperimentConfig::from_file(opts.config_path);
  }
  if (opts.seed.has_value()) cfg.env.seed = *opts.seed;
  if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
  return cfg;
}

void write_metrics_csv(const std::string& path, const std::vector<EvalPoint>& evals) {
  std::ofstream os(path);
  os << kMetricsHeader << '\n';
  for (const EvalPoint& p : evals) os << format_eval_row(p) << '\n';
}

}  // namespace

const char* kMetricsHeader =
    "step,mean_fidelity,success_rate,mean_rcd,mean_ep_len,seed,"
    "det_mean_fidelity,det_success_rate";

std::string format_eval_row(const EvalPoint& p) {
  std::ostringstream os;
  os << p.step << ',' << fmt17(p.mean_fidelity) << ',' << fmt17(p.success_rate) << ','
     << fmt17(p.mean_rcd) << ',' << fmt17(p.mean_ep_len) << ',' << p.seed << ','
     << fmt17(p.det_mean_fidelity) << ',' << fmt17(p.det_success_rate);
  return os.str();
}

std::vector<EvalPoint> read_metrics_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open metrics file '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("empty metrics file '" + path + "'");
  if (line != kMetricsHeader)
    throw ConfigError("unexpected metrics header in '" + path + "'");
  std::vector<EvalPoint> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    EvalPoint p;
    std::istringstream ls(line);
    std::string cell;
    auto next_cell = [&]() {
      if (!std::getline(ls, cell, ','))
        throw ConfigError("short metrics row in '" + path + "'");
      return cell;
    };
    p.step = std::stol(next_cell());
    p.mean_fidelity = std::stod(next_cell());
    p.success_rate = std::stod(next_cell());
    p.mean_rcd = std::stod(next_cell());
    p.mean_ep_len = std::stod(next_cell());
    p.seed = std::stoull(next_cell());
    p.det_mean_fidelity = std::stod(next_cell());
    p.det_success_rate = std::stod(next_cell());
    rows.push_back(p);
  }
  return rows;
}

StateVector parse_target_state(const std::string& name, int n) {
  if (name.rfind("basis:", 0) == 0) {
    const std::string bits = name.substr(6);
    if (static_cast<int>(bits.size()) != n)
      throw ConfigError("basis target '" + name + "' needs " + std::to_string(n) +
                        " bits");
    std::size_t index = 0;
    for (char c : bits) {
      if (c != '0' && c != '1') throw ConfigError("bad basis bitstring '" + bits + "'");
      index = (index << 1) | static_cast<std::size_t>(c - '0');
    }
    StateVector s = zero_state(n);
    s.amps[0] = 0.0;
    s.amps[index] = 1.0;
    return s;
  }
  if (name.rfind("bell:", 0) == 0) {
    if (n != 2) throw ConfigError("bell targets require n = 2");
    const std::string which = name.substr(5);
    const double r = 1.0 / std::sqrt(2.0);
    StateVector s = zero_state(2);
    s.amps[0] = 0.0;
    if (which == "phi+") {
      s.amps[0] = r;
      s.amps[3] = r;
    } else if (which == "phi-") {
      s.amps[0] = r;
      s.amps[3] = -r;
    } else if (which == "psi+") {
      s.amps[1] = r;
      s.amps[2] = r;
    } else if (which == "psi-") {
      s.amps[1] = r;
      s.amps[2] = -r;
    } else {
      throw ConfigError("unknown bell state '" + which + "'");
    }
    return s;
  }
  throw ConfigError("unknown target spec '" + name + "'");
}

std::vector<StateVector> two_qubit_basis_states() {
  return {parse_target_state("basis:00", 2), parse_target_state("basis:01", 2),
          parse_target_state("basis:10", 2), parse_target_state("basis:11", 2)};
}

std::vector<StateVector> bell_states() {
  return {parse_target_state("bell:phi+", 2), parse_target_state("bell:phi-", 2),
          parse_target_state("bell:psi+", 2), parse_target_state("bell:psi-", 2)};
}

ExperimentConfig ExperimentConfig::from_config(const ConfigFile& file) {
  ExperimentConfig c;
  c.mode = file.get_string("experiment", "mode", c.mode);
  if (c.mode != "one-stage" && c.mode != "two-stage" && c.mode != "a2c" &&
      c.mode != "baseline")
    throw ConfigError("mode must be one-stage | two-stage | a2c | baseline");
  c.repetitions = static_cast<int>(file.get_long("experiment", "repetitions", c.repetitions));
  if (c.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  c.output_dir = file.get_string("experiment", "output_dir", c.output_dir);
  c.eval_targets = static_cast<int>(file.get_long("experiment", "eval_targets", c.eval_targets));
  c.eval_corpus_path = file.get_string("experiment", "eval_corpus_path", c.eval_corpus_path);
  if (!c.eval_corpus_path.empty() && !fs::exists(c.eval_corpus_path))
    throw ConfigError("eval corpus file '" + c.eval_corpus_path + "' does not exist");
  c.eval_episodes = static_cast<int>(file.get_long("experiment", "eval_episodes", c.eval_episodes));
  c.target = file.get_string("experiment", "target", c.target);
  c.eval_every_steps = file.get_long("experiment", "eval_every_steps", c.eval_every_steps);
  c.checkpoint_every_evals =
      static_cast<int>(file.get_long("experiment", "checkpoint_every_evals", c.checkpoint_every_evals));

  c.env.n = static_cast<int>(file.get_long("env", "n", c.env.n));
  c.env.lambda = static_cast<int>(file.get_long("env", "lambda", c.env.lambda));
  c.env.epsilon = file.get_double("env", "epsilon", c.env.epsilon);
  c.env.terminal_bonus = file.get_double("env", "terminal_bonus", c.env.terminal_bonus);
  c.env.reward_clip = file.get_double("env", "reward_clip", c.env.reward_clip);
  c.env.seed = file.get_u64("env", "seed", c.env.seed);

  const double default_lr = c.mode == "two-stage" ? 1e-4 : 5e-4;
  c.ppo.lr = file.get_double("ppo", "lr", default_lr);
  c.ppo.clip_ratio = file.get_double("ppo", "clip_ratio", c.ppo.clip_ratio);
  c.ppo.gamma = file.get_double("ppo", "gamma", c.ppo.gamma);
  c.ppo.gae_lambda = file.get_double("ppo", "gae_lambda", c.ppo.gae_lambda);
  c.ppo.epochs = static_cast<int>(file.get_long("ppo", "epochs", c.ppo.epochs));
  c.ppo.minibatch_size = static_cast<int>(file.get_long("ppo", "minibatch_size", c.ppo.minibatch_size));
  c.ppo.entropy_coef = file.get_double("ppo", "entropy_coef", c.ppo.entropy_coef);
  c.ppo.value_coef = file.get_double("ppo", "value_coef", c.ppo.value_coef);
  c.ppo.horizon = static_cast<int>(file.get_long("ppo", "horizon", c.ppo.horizon));
  c.ppo.env_count = static_cast<int>(file.get_long("ppo", "env_count", c.ppo.env_count));
  c.ppo.total_steps = file.get_long("ppo", "total_steps", c.ppo.total_steps);
  c.ppo.normalize_advantages =
      file.get_bool("ppo", "normalize_advantages", c.ppo.normalize_advantages);
  c.ppo.normalize_rewards = file.get_bool("ppo", "normalize_rewards", c.ppo.normalize_rewards);
  c.ppo.max_grad_norm = file.get_double("ppo", "max_grad_norm", c.ppo.max_grad_norm);

  c.a2c.lr = file.get_double("a2c", "lr", c.a2c.lr);
  c.a2c.gamma = file.get_double("a2c", "gamma", c.a2c.gamma);
  c.a2c.n_steps = static_cast<int>(file.get_long("a2c", "n_steps", c.a2c.n_steps));
  c.a2c.entropy_coef = file.get_double("a2c", "entropy_coef", c.a2c.entropy_coef);
  c.a2c.value_coef = file.get_double("a2c", "value_coef", c.a2c.value_coef);
  c.a2c.env_count = static_cast<int>(file.get_long("a2c", "env_count", c.a2c.env_count));
  c.a2c.total_steps = file.get_long("a2c", "total_steps", c.a2c.total_steps);
  c.a2c.max_grad_norm = file.get_double("a2c", "max_grad_norm", c.a2c.max_grad_norm);

  c.refine.max_steps = static_cast<int>(file.get_long("refine", "max_steps", c.refine.max_steps));
  c.refine.lr = file.get_double("refine", "lr", c.refine.lr);
  c.refine.tol = file.get_double("refine", "tol", c.refine.tol);

  c.baseline_targets = static_cast<int>(file.get_long("baseline", "targets", c.baseline_targets));
  c.baseline_steps = static_cast<int>(file.get_long("baseline", "steps", c.baseline_steps));
  c.baseline_lr = file.get_double("baseline", "lr", c.baseline_lr);

  c.lambda_list = file.get_int_list("landscape", "lambda_list", c.lambda_list);
  c.n_list = file.get_int_list("landscape", "n_list", c.n_list);

  file.ensure_all_consumed();

  try {
    c.env.validate();
    c.ppo.validate();
    c.a2c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.target != "random") parse_target_state(c.target, c.env.n);  // validates
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  return from_config(ConfigFile::parse_file(path));
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream os;
  os << "[experiment]\n";
  os << "mode = " << mode << '\n';
  os << "repetitions = " << repetitions << '\n';
  os << "output_dir = " << output_dir << '\n';
  os << "eval_targets = " << eval_targets << '\n';
  os << "eval_corpus_path = " << eval_corpus_path << '\n';
  os << "eval_episodes = " << eval_episodes << '\n';
  os << "target = " << target << '\n';
  os << "eval_every_steps = " << eval_every_steps << '\n';
  os << "checkpoint_every_evals = " << checkpoint_every_evals << '\n';
  os << "\n[env]\n";
  os << "n = " << env.n << '\n';
  os << "lambda = " << env.lambda << '\n';
  os << "epsilon = " << fmt17(env.epsilon) << '\n';
  os << "terminal_bonus = " << fmt17(env.terminal_bonus) << '\n';
  os << "reward_clip = " << fmt17(env.reward_clip) << '\n';
  os << "seed = " << env.seed << '\n';
  os << "\n[ppo]\n";
  os << "lr = " << fmt17(ppo.lr) << '\n';
  os << "clip_ratio = " << fmt17(ppo.clip_ratio) << '\n';
  os << "gamma = " << fmt17(ppo.gamma) << '\n';
  os << "gae_lambda = " << fmt17(ppo.gae_lambda) << '\n';
  os << "epochs = " << ppo.epochs << '\n';
  os << "minibatch_size = " << ppo.minibatch_size << '\n';
  os << "entropy_coef = " << fmt17(ppo.entropy_coef) << '\n';
  os << "value_coef = " << fmt17(ppo.value_coef) << '\n';
  os << "horizon = " << ppo.horizon << '\n';
  os << "env_count = " << ppo.env_count << '\n';
  os << "total_steps = " << ppo.total_steps << '\n';
  os << "normalize_advantages = " << (ppo.normalize_advantages ? "true" : "false") << '\n';
  os << "normalize_rewards = " << (ppo.normalize_rewards ? "true" : "false") << '\n';
  os << "max_grad_norm = " << fmt17(ppo.max_grad_norm) << '\n';
  os << "\n[a2c]\n";
  os << "lr = " << fmt17(a2c.lr) << '\n';
  os << "gamma = " << fmt17(a2c.gamma) << '\n';
  os << "n_steps = " << a2c.n_steps << '\n';
  os << "entropy_coef = " << fmt17(a2c.entropy_coef) << '\n';
  os << "value_coef = " << fmt17(a2c.value_coef) << '\n';
  os << "env_count = " << a2c.env_count << '\n';
  os << "total_steps = " << a2c.total_steps << '\n';
  os << "max_grad_norm = " << fmt17(a2c.max_grad_norm) << '\n';
  os << "\n[refine]\n";
  os << "max_steps = " << refine.max_steps << '\n';
  os << "lr = " << fmt17(refine.lr) << '\n';
  os << "tol = " << fmt17(refine.tol) << '\n';
  os << "\n[baseline]\n";
  os << "targets = " << baseline_targets << '\n';
  os << "steps = " << baseline_steps << '\n';
  os << "lr = " << fmt17(baseline_lr) << '\n';
  os << "\n[landscape]\n";
  os << "lambda_list = ";
  for (std::size_t i = 0; i < lambda_list.size(); ++i)
    os << (i ? "," : "") << lambda_list[i];
  os << "\nn_list = ";
  for (std::size_t i = 0; i < n_list.size(); ++i) os << (i ? "," : "") << n_list[i];
  os << '\n';
  return os.str();
}

TrainMode ExperimentConfig::train_mode() const {
  if (mode == "two-stage") return TrainMode::TwoStage;
  if (mode == "a2c") return TrainMode::A2c;
  return TrainMode::OneStage;
}

std::vector<StateVector> ExperimentConfig::fixed_target_states() const {
  if (target == "random") return {};
  return {parse_target_state(target, env.n)};
}

std::string content_hash_hex(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("content_hash_hex: cannot open '" + path + "'");
  std::uint64_t h = 1469598103934665603ULL;
  char buf[4096];
  while (is) {
    is.read(buf, sizeof(buf));
    const std::streamsize got = is.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

int worker_limit(bool deterministic) {
  if (deterministic) return 1;
  if (const char* env = std::getenv("QSYNTH_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

RepetitionResult run_repetition(const ExperimentConfig& cfg, int rep,
                                const std::string& checkpoint_dir) {
  RepetitionResult result;
  result.rep = rep;
  result.seed = cfg.env.seed + static_cast<std::uint64_t>(rep);

  TrainRun run;
  run.mode = cfg.train_mode();
  run.env.cfg = cfg.env;
  run.env.cfg.seed = result.seed;
  run.env.fixed_targets = cfg.fixed_target_states();
  run.ppo = cfg.ppo;
  run.ppo.seed = result.seed;
  run.a2c = cfg.a2c;
  run.a2c.seed = result.seed;
  run.options.eval_every_steps = cfg.eval_every_steps;
  run.options.eval_episodes = cfg.eval_episodes;
  run.options.eval_target_count = cfg.eval_targets;
  run.options.refine = cfg.refine;
  if (!cfg.eval_corpus_path.empty()) {
    std::ifstream is(cfg.eval_corpus_path);
    run.options.eval_corpus = read_target_corpus(is);
  }
  int eval_index = 0;
  if (!checkpoint_dir.empty() && cfg.checkpoint_every_evals > 0) {
    const int every = cfg.checkpoint_every_evals;
    run.options.on_eval = [&eval_index, every, checkpoint_dir, rep](
                              const EvalPoint&, const PolicyNet& policy) {
      ++eval_index;
      if (eval_index % every != 0) return;
      std::ofstream ck(fs::path(checkpoint_dir) /
                       ("policy_" + std::to_string(rep) + "_eval" +
                        std::to_string(eval_index) + ".ckpt"));
      policy.save(ck);
    };
  }

  const auto start = std::chrono::steady_clock::now();
  TrainResult tr = train(run);
  result.wall_clock_seconds = elapsed_seconds(start);
  result.evals = std::move(tr.evals);
  result.env_steps = tr.env_steps;
  result.refinements = tr.refinements;
  result.policy.emplace(std::move(tr.policy));
  return result;
}

void write_manifest(const std::string& dir, const std::string& command,
                    const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                    bool deterministic, double wall_clock_seconds) {
  json j;
  j["version"] = 1;
  j["command"] = command;
  j["config_text"] = cfg.serialize();
  j["base_seed"] = cfg.env.seed;
  j["seeds"] = seeds;
  j["deterministic"] = deterministic;
  j["wall_clock_seconds"] = wall_clock_seconds;
  if (!cfg.eval_corpus_path.empty())
    j["corpus_hash"] = content_hash_hex(cfg.eval_corpus_path);

  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).string();
    if (rel == "manifest.json") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  json artifacts = json::array();
  for (const std::string& rel : files) {
    artifacts.push_back({{"path", rel},
                         {"hash", content_hash_hex((fs::path(dir) / rel).string())}});
  }
  j["artifacts"] = artifacts;

  std::ofstream os(fs::path(dir) / "manifest.json");
  os << j.dump(2) << '\n';
}

ExperimentConfig config_from_manifest(const std::string& manifest_path) {
  std::ifstream is(manifest_path);
  if (!is) throw ConfigError("cannot open manifest '" + manifest_path + "'");
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad manifest JSON: ") + e.what());
  }
  if (!j.contains("config_text"))
    throw ConfigError("manifest has no embedded config_text");
  return ExperimentConfig::from_config(
      ConfigFile::parse_text(j["config_text"].get<std::string>()));
}

int cmd_train(const CliOptions& opts) {
  try {
    ExperimentConfig cfg = load_cli_config(opts);
    if (cfg.mode == "baseline")
      throw ConfigError("mode 'baseline' runs via the baseline command");
    fs::create_directories(cfg.output_dir);
    const auto start = std::chrono::steady_clock::now();

    std::vector<std::uint64_t> seeds(cfg.repetitions);
    std::vector<RepetitionResult> results(cfg.repetitions);
    parallel_for(cfg.repetitions, worker_limit(opts.deterministic), [&](int rep) {
      RepetitionResult r = run_repetition(cfg, rep, cfg.output_dir);
      const fs::path dir(cfg.output_dir);
      write_metrics_csv((dir / ("run_" + std::to_string(rep) + ".csv")).string(),
                        r.evals);
      std::ofstream ck(dir / ("policy_" + std::to_string(rep) + ".ckpt"));
      r.policy->save(ck);
      seeds[rep] = r.seed;
      results[rep] = std::move(r);
    });

    write_manifest(cfg.output_dir, "train", cfg, seeds, opts.deterministic,
                   elapsed_seconds(start));
    for (const RepetitionResult& r : results) {
      const EvalPoint* final_eval = r.evals.empty() ? nullptr : &r.evals.back();
      std::cout << "rep " << r.rep << " seed " << r.seed << " steps " << r.env_steps
                << " success "
                << (final_eval ? fmt17(final_eval->success_rate) : "n/a")
                << " fidelity "
                << (final_eval ? fmt17(final_eval->mean_fidelity) : "n/a") << '\n';
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

namespace {

struct CellOutcome {
  double success = 0.0;
  double fidelity = 0.0;
  double rcd_val = 0.0;
  double wall = 0.0;
  std::uint64_t seed = 0;
  long steps = 0;
};

CellOutcome run_cell(const ExperimentConfig& cfg, int rep) {
  RepetitionResult r = run_repetition(cfg, rep);
  CellOutcome out;
  out.seed = r.seed;
  out.wall = r.wall_clock_seconds;
  out.steps = r.env_steps;
  if (!r.evals.empty()) {
    out.success = r.evals.back().success_rate;
    out.fidelity = r.evals.back().mean_fidelity;
    out.rcd_val = r.evals.back().mean_rcd;
  }
  return out;
}

}  // namespace

int cmd_bench_reconstruction(const std::string& suite, const CliOptions& opts) {
  try {
    ExperimentConfig cfg = load_cli_config(opts);
    if (suite != "basis" && suite != "bell")
      throw ConfigError("bench suite must be 'basis' or 'bell'");
    if (cfg.env.n != 2) throw ConfigError("reconstruction suites require n = 2");
    const std::vector<std::string> names =
        suite == "basis"
            ? std::vector<std::string>{"basis:00", "basis:01", "basis:10", "basis:11"}
            : std::vector<std::string>{"bell:phi+", "bell:phi-", "bell:psi+", "bell:psi-"};

    fs::create_directories(cfg.output_dir);
    const auto start = std::chrono::steady_clock::now();
    const int cells = static_cast<int>(names.size()) * cfg.repetitions;
    std::vector<CellOutcome> outcomes(cells);
    parallel_for(cells, worker_limit(opts.deterministic), [&](int i) {
      const int target_idx = i / cfg.repetitions;
      const int rep = i % cfg.repetitions;
      ExperimentConfig cell_cfg = cfg;
      cell_cfg.target = names[target_idx];
      outcomes[i] = run_cell(cell_cfg, rep);
    });

    const fs::path dir(cfg.output_dir);
    std::ofstream rows(dir / ("bench_" + suite + ".csv"));
    rows << "target,rep,seed,final_success_rate,final_mean_fidelity,final_mean_rcd,"
            "wall_clock_seconds\n";
    for (int i = 0; i < cells; ++i) {
      const CellOutcome& o = outcomes[i];
      rows << names[i / cfg.repetitions] << ',' << i % cfg.repetitions << ','
           << o.seed << ',' << fmt17(o.success) << ',' << fmt17(o.fidelity) << ','
           << fmt17(o.rcd_val) << ',' << fmt17(o.wall) << '\n';
    }
    rows.close();

    std::ofstream summary(dir / ("bench_" + suite + "_summary.csv"));
    summary << "target,success_mean,success_ci_low,success_ci_high,reps,degenerate_ci\n";
    for (std::size_t t = 0; t < names.size(); ++t) {
      std::vector<double> succ;
      for (int rep = 0; rep < cfg.repetitions; ++rep)
        succ.push_back(outcomes[t * cfg.repetitions + rep].success);
      const MeanCi ci = normal_ci95(succ);
      summary << names[t] << ',' << fmt17(ci.mean) << ',' << fmt17(ci.ci_low) << ','
              << fmt17(ci.ci_high) << ',' << ci.count << ','
              << (ci.degenerate ? 1 : 0) << '\n';
      std::cout << names[t] << " success " << fmt17(ci.mean) << " [" << fmt17(ci.ci_low)
                << ", " << fmt17(ci.ci_high) << "]"
                << (ci.degenerate ? " (degenerate CI: single repetition)" : "")
                << '\n';
    }
    summary.close();

    std::vector<std::uint64_t> seeds;
    for (int rep = 0; rep < cfg.repetitions; ++rep)
      seeds.push_back(cfg.env.seed + static_cast<std::uint64_t>(rep));
    write_manifest(cfg.output_dir, "bench " + suite, cfg, seeds, opts.deterministic,
                   elapsed_seconds(start));
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int cmd_landscape(const CliOptions& opts) {
  try {
    ExperimentConfig cfg = load_cli_config(opts);
    fs::create_directories(cfg.output_dir);
    const auto start = std::chrono::steady_clock::now();

    struct Cell {
      int n;
      int lambda;
    };
    std::vector<Cell> cells;
    for (int n : cfg.n_list)
      for (int lambda : cfg.lambda_list) cells.push_back({n, lambda});

    const int jobs = static_cast<int>(cells.size()) * cfg.repetitions;
    std::vector<CellOutcome> outcomes(jobs);
    parallel_for(jobs, worker_limit(opts.deterministic), [&](int i) {
      const int cell_idx = i / cfg.repetitions;
      const int rep = i % cfg.repetitions;
      ExperimentConfig cell_cfg = cfg;
      cell_cfg.env.n = cells[cell_idx].n;
      cell_cfg.env.lambda = cells[cell_idx].lambda;
      outcomes[i] = run_cell(cell_cfg, rep);
    });

    const fs::path dir(cfg.output_dir);
    std::ofstream tidy(dir / "landscape.csv");
    tidy << "n,lambda,rep,seed,final_success_rate,final_mean_fidelity,final_mean_rcd,"
            "env_steps,wall_clock_seconds\n";
    for (int i = 0; i < jobs; ++i) {
      const Cell& c = cells[i / cfg.repetitions];
      const CellOutcome& o = outcomes[i];
      tidy << c.n << ',' << c.lambda << ',' << i % cfg.repetitions << ',' << o.seed
           << ',' << fmt17(o.success) << ',' << fmt17(o.fidelity) << ','
           << fmt17(o.rcd_val) << ',' << o.steps << ',' << fmt17(o.wall) << '\n';
    }
    tidy.close();

    std::ofstream agg(dir / "landscape_summary.csv");
    agg << "n,lambda,success_mean,success_ci_low,success_ci_high,rcd_mean,"
           "rcd_ci_low,rcd_ci_high,wall_clock_mean,reps\n";
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::vector<double> succ, rcds, walls;
      for (int rep = 0; rep < cfg.repetitions; ++rep) {
        const CellOutcome& o = outcomes[c * cfg.repetitions + rep];
        succ.push_back(o.success);
        rcds.push_back(o.rcd_val);
        walls.push_back(o.wall);
      }
      const MeanCi s = normal_ci95(succ);
      const MeanCi r = normal_ci95(rcds);
      const MeanCi w = normal_ci95(walls);
      agg << cells[c].n << ',' << cells[c].lambda << ',' << fmt17(s.mean) << ','
          << fmt17(s.ci_low) << ',' << fmt17(s.ci_high) << ',' << fmt17(r.mean) << ','
          << fmt17(r.ci_low) << ',' << fmt17(r.ci_high) << ',' << fmt17(w.mean) << ','
          << s.count << '\n';
    }
    agg.close();

    std::vector<std::uint64_t> seeds;
    for (int rep = 0; rep < cfg.repetitions; ++rep)
      seeds.push_back(cfg.env.seed + static_cast<std::uint64_t>(rep));
    write_manifest(cfg.output_dir, "landscape", cfg, seeds, opts.deterministic,
                   elapsed_seconds(start));
    std::cout << "landscape: " << cells.size() << " cells x " << cfg.repetitions
              << " reps written to " << cfg.output_dir << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int cmd_baseline(const CliOptions& opts) {
  try {
    ExperimentConfig cfg = load_cli_config(opts);
    fs::create_directories(cfg.output_dir);
    const auto start = std::chrono::steady_clock::now();

    Rng target_rng(cfg.env.seed);
    std::vector<TargetSpec> targets;
    targets.reserve(cfg.baseline_targets);
    for (int i = 0; i < cfg.baseline_targets; ++i)
      targets.push_back(generate_target(cfg.env, target_rng));

    BaselineOptions bopts;
    bopts.steps = cfg.baseline_steps;
    bopts.lr = cfg.baseline_lr;
    Rng init_rng(target_rng.split());
    const BaselineReport report = classical_baseline(targets, bopts, init_rng);

    const fs::path dir(cfg.output_dir);
    std::ofstream rows(dir / "baseline.csv");
    rows << "target_id,seed,initial_fidelity,final_fidelity,steps_used\n";
    for (const BaselineEntry& e : report.entries) {
      rows << e.target_id << ',' << e.seed << ',' << fmt17(e.initial_fidelity) << ','
           << fmt17(e.final_fidelity) << ',' << e.steps_used << '\n';
    }
    rows.close();
    std::ofstream summary(dir / "baseline_summary.csv");
    summary << "targets,steps,mean_final_fidelity,min_final_fidelity\n";
    summary << report.entries.size() << ',' << cfg.baseline_steps << ','
            << fmt17(report.mean_final) << ',' << fmt17(report.min_final) << '\n';
    summary.close();

    write_manifest(cfg.output_dir, "baseline", cfg, {cfg.env.seed},
                   opts.deterministic, elapsed_seconds(start));
    std::cout << "baseline: mean fidelity " << fmt17(report.mean_final) << ", min "
              << fmt17(report.min_final) << " over " << report.entries.size()
              << " targets\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int cmd_targets_export(const CliOptions& opts, const std::string& out_path, int count) {
  try {
    ExperimentConfig cfg = load_cli_config(opts);
    if (count < 1) throw ConfigError("targets export: count must be >= 1");
    Rng rng(cfg.env.seed);
    std::vector<TargetSpec> targets;
    targets.reserve(count);
    for (int i = 0; i < count; ++i) targets.push_back(generate_target(cfg.env, rng));
    if (!out_path.empty()) {
      const fs::path parent = fs::path(out_path).parent_path();
      if (!parent.empty()) fs::create_directories(parent);
    }
    std::ofstream os(out_path);
    if (!os) throw std::runtime_error("cannot open '" + out_path + "' for writing");
    write_target_corpus(os, targets, cfg.env.seed);
    std::cout << "wrote " << targets.size() << " targets to " << out_path << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace qsynth
