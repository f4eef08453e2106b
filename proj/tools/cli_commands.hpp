#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pilotstack/config.hpp"

namespace pilot::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kInvalid = 2, kRuntime = 3 };

/// Defaults < config file < command-line flags.
AppConfig resolve_config(const std::optional<std::string>& path);

struct DriveArgs {
  std::optional<std::string> config;
  std::optional<std::string> model;
  std::string host = "127.0.0.1";
  unsigned short port = 8080;
  std::string sessions = "sessions";
  std::string ui_root = "web";
  double duration_s = 0.0;  // 0 runs until interrupted
};

struct SynthArgs {
  std::optional<std::string> config;
  std::size_t samples = 1500;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> noise;
};

struct TrainArgs {
  std::optional<std::string> config;
  std::vector<std::string> data;
  std::string out;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> batch_size;
};

struct AutopilotArgs {
  std::optional<std::string> config;
  std::string model;
  std::size_t episodes = 1;
  std::string out;
  std::size_t max_steps = 1200;
};

struct EvalArgs {
  std::optional<std::string> config;
  std::optional<std::string> trace;
  std::optional<std::string> model;
  std::size_t episodes = 1;
  std::size_t max_steps = 1200;
  std::optional<std::string> json_out;
};

struct StatsArgs {
  std::vector<std::string> data;
};

struct CheckArgs {
  std::optional<std::string> config;
};

int run_drive(const DriveArgs& args);
int run_synth(const SynthArgs& args);
int run_train(const TrainArgs& args);
int run_autopilot(const AutopilotArgs& args);
int run_eval(const EvalArgs& args);
int run_dataset_stats(const StatsArgs& args);
int run_check(const CheckArgs& args);

std::string version_string();

}  // namespace pilot::cli
