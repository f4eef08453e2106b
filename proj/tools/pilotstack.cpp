#include <cstdio>
#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "cli_commands.hpp"
#include "pilotstack/error.hpp"
#include "pilotstack/eval.hpp"
#include "pilotstack/nn/trainer.hpp"

using namespace pilot::cli;

int main(int argc, char** argv) {
  CLI::App app{"pilotstack: simulate, record, train and evaluate an end-to-end driving policy"};
  app.require_subcommand(0, 1);
  bool show_version = false;
  app.add_flag("--version", show_version, "Print the version and checkpoint format");

  DriveArgs drive;
  auto* drive_cmd = app.add_subcommand("drive", "Serve the teleop UI and WebSocket around a live simulation");
  drive_cmd->add_option("--config", drive.config, "Config file");
  drive_cmd->add_option("--model", drive.model, "Checkpoint; starts in autopilot mode");
  drive_cmd->add_option("--host", drive.host, "Bind address")->capture_default_str();
  drive_cmd->add_option("--port", drive.port, "Bind port (0 picks one)")->capture_default_str();
  drive_cmd->add_option("--sessions", drive.sessions, "Directory for recorded sessions")->capture_default_str();
  drive_cmd->add_option("--ui", drive.ui_root, "Directory holding the UI bundle")->capture_default_str();
  drive_cmd->add_option("--duration", drive.duration_s, "Stop after this many seconds (0 = until Ctrl-C)");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Record a dataset by driving the scripted expert");
  synth_cmd->add_option("--config", synth.config, "Config file");
  synth_cmd->add_option("--samples", synth.samples, "Number of records")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Seed (default: train.seed from the config)");
  synth_cmd->add_option("--noise", synth.noise, "Steering noise amplitude (overrides synth.noise_level)");
  synth_cmd->add_option("--out", synth.out, "New session directory")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train the policy network on recorded sessions");
  train_cmd->add_option("--config", train.config, "Config file");
  train_cmd->add_option("--data", train.data, "Session directories")->required()->delimiter(',');
  train_cmd->add_option("--out", train.out, "Checkpoint path; the loss CSV goes next to it")->required();
  train_cmd->add_option("--epochs", train.epochs, "Override train.epochs");
  train_cmd->add_option("--seed", train.seed, "Override train.seed");
  train_cmd->add_option("--batch-size", train.batch_size, "Override train.batch_size");

  AutopilotArgs autopilot;
  auto* autopilot_cmd = app.add_subcommand("autopilot", "Drive headless episodes with a trained model");
  autopilot_cmd->add_option("--config", autopilot.config, "Config file");
  autopilot_cmd->add_option("--model", autopilot.model, "Checkpoint")->required();
  autopilot_cmd->add_option("--episodes", autopilot.episodes, "Episodes, started evenly around the track")
      ->capture_default_str();
  autopilot_cmd->add_option("--out", autopilot.out, "Trace JSONL (episode k > 1 adds a _k suffix)")->required();
  autopilot_cmd->add_option("--max-steps", autopilot.max_steps, "Step limit per episode")->capture_default_str();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score a trace, or run and score a model");
  eval_cmd->add_option("--config", eval.config, "Config file");
  eval_cmd->add_option("--trace", eval.trace, "Trace JSONL to score");
  eval_cmd->add_option("--model", eval.model, "Checkpoint to run");
  eval_cmd->add_option("--episodes", eval.episodes, "Episodes when running a model")->capture_default_str();
  eval_cmd->add_option("--max-steps", eval.max_steps, "Step limit per episode")->capture_default_str();
  eval_cmd->add_option("--json", eval.json_out, "Also write the metrics as JSON");

  StatsArgs stats;
  auto* dataset_cmd = app.add_subcommand("dataset", "Inspect recorded sessions");
  dataset_cmd->require_subcommand(1);
  auto* stats_cmd = dataset_cmd->add_subcommand("stats", "Record count, label histograms and integrity check");
  stats_cmd->add_option("--data", stats.data, "Session directories")->required()->delimiter(',');

  CheckArgs check;
  auto* check_cmd = app.add_subcommand("check", "Validate a config and the FIRA size limits");
  check_cmd->add_option("--config", check.config, "Config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (show_version) {
      std::printf("%s\n", version_string().c_str());
      return kOk;
    }
    if (*drive_cmd) return run_drive(drive);
    if (*synth_cmd) return run_synth(synth);
    if (*train_cmd) return run_train(train);
    if (*autopilot_cmd) return run_autopilot(autopilot);
    if (*eval_cmd) return run_eval(eval);
    if (*stats_cmd) return run_dataset_stats(stats);
    if (*check_cmd) return run_check(check);
    std::cerr << app.help();
    return kUsage;
  } catch (const pilot::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const pilot::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}
