#include <cstdint>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qsynth/experiment.hpp"

namespace {

struct CommonArgs {
  qsynth::CliOptions opts;
  std::uint64_t seed_value = 0;
  CLI::Option* seed_opt = nullptr;

  void attach(CLI::App* cmd, bool config_required = true) {
    auto* config = cmd->add_option("--config", opts.config_path,
                                   "experiment config (or a manifest.json to replay)");
    if (config_required) config->required();
    seed_opt = cmd->add_option("--seed", seed_value, "override the base seed");
    cmd->add_option("--out", opts.out_dir, "override the output directory");
    cmd->add_flag("--deterministic", opts.deterministic,
                  "single-threaded, bit-reproducible execution");
  }

  qsynth::CliOptions resolve() {
    if (seed_opt != nullptr && seed_opt->count() > 0) opts.seed = seed_value;
    return opts;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qsynth: RL synthesis of state-preparation circuits"};
  app.require_subcommand(1);
  int exit_code = qsynth::kExitOk;

  CommonArgs train_args;
  auto* train = app.add_subcommand("train", "run training repetitions from a config");
  train_args.attach(train);
  train->callback([&] { exit_code = qsynth::cmd_train(train_args.resolve()); });

  CommonArgs bench_args;
  std::string suite;
  auto* bench = app.add_subcommand("bench", "basis/bell state reconstruction suites");
  bench->add_option("suite", suite, "basis | bell")->required();
  bench_args.attach(bench);
  bench->callback(
      [&] { exit_code = qsynth::cmd_bench_reconstruction(suite, bench_args.resolve()); });

  CommonArgs landscape_args;
  auto* landscape =
      app.add_subcommand("landscape", "sweep over lambda and qubit counts");
  landscape_args.attach(landscape);
  landscape->callback(
      [&] { exit_code = qsynth::cmd_landscape(landscape_args.resolve()); });

  CommonArgs baseline_args;
  auto* baseline =
      app.add_subcommand("baseline", "classical variational ansatz baseline");
  baseline_args.attach(baseline);
  baseline->callback(
      [&] { exit_code = qsynth::cmd_baseline(baseline_args.resolve()); });

  std::vector<std::string> report_dirs;
  std::string report_out = "report";
  bool report_svg = false;
  auto* report = app.add_subcommand("report", "merge run directories into tables");
  report->add_option("dirs", report_dirs, "run directories to merge")->required();
  report->add_option("--out", report_out, "report output directory");
  report->add_flag("--svg", report_svg, "render SVG charts");
  report->callback(
      [&] { exit_code = qsynth::cmd_report(report_dirs, report_out, report_svg); });

  auto* targets = app.add_subcommand("targets", "target corpus utilities");
  targets->require_subcommand(1);
  CommonArgs export_args;
  std::string export_path = "targets.txt";
  int export_count = 32;
  auto* exp = targets->add_subcommand("export", "write a seeded target corpus");
  export_args.attach(exp);
  exp->add_option("--file", export_path, "output corpus path");
  exp->add_option("--count", export_count, "number of targets");
  exp->callback([&] {
    exit_code =
        qsynth::cmd_targets_export(export_args.resolve(), export_path, export_count);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return qsynth::kExitConfig;
  }
  return exit_code;
}
