#include "cli_commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "pilotstack/dataset.hpp"
#include "pilotstack/error.hpp"
#include "pilotstack/eval.hpp"
#include "pilotstack/nn/checkpoint.hpp"
#include "pilotstack/nn/trainer.hpp"
#include "pilotstack/teleop/server.hpp"

namespace pilot::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

std::vector<fs::path> session_dirs(const std::vector<std::string>& data) {
  std::vector<fs::path> dirs;
  for (const auto& d : data) {
    if (!fs::exists(fs::path(d) / "records.jsonl") && !fs::exists(fs::path(d) / "manifest.json")) {
      throw ValidationError("no records found in " + d);
    }
    dirs.emplace_back(d);
  }
  if (dirs.empty()) throw ValidationError("no records found: --data is empty");
  return dirs;
}

std::vector<EpisodeTrace> run_episodes(const AppConfig& config, const Track& track, const nn::ModelParams& params,
                                       std::size_t episodes, std::size_t max_steps) {
  const SimSetup setup{&track, config.vehicle, config.camera, config.pilot};
  const Driver driver = model_driver(params, config.pilot);
  std::vector<EpisodeTrace> traces;
  for (std::size_t k = 0; k < episodes; ++k) {
    const double arc = track.length() * static_cast<double>(k) / static_cast<double>(episodes);
    traces.push_back(run_loop(setup, driver, {max_steps, true, false}, start_pose(track, arc)));
  }
  return traces;
}

fs::path episode_path(const fs::path& out, std::size_t k) {
  if (k == 0) return out;
  fs::path p = out;
  p.replace_filename(out.stem().string() + "_" + std::to_string(k + 1) + out.extension().string());
  return p;
}

void print_histogram(const char* name, const std::vector<double>& values) {
  constexpr int kBins = 10;
  std::vector<std::size_t> counts(kBins, 0);
  for (double v : values) {
    int b = static_cast<int>(std::floor((v + 1.0) / 2.0 * kBins));
    counts[static_cast<std::size_t>(std::clamp(b, 0, kBins - 1))]++;
  }
  std::printf("%s histogram:\n", name);
  const std::size_t peak = std::max<std::size_t>(1, *std::max_element(counts.begin(), counts.end()));
  for (int b = 0; b < kBins; ++b) {
    const double lo = -1.0 + 2.0 * b / kBins;
    const int bar = static_cast<int>(40 * counts[static_cast<std::size_t>(b)] / peak);
    std::printf("  [%+.1f, %+.1f%c %6zu %s\n", lo, lo + 2.0 / kBins, b == kBins - 1 ? ']' : ')',
                counts[static_cast<std::size_t>(b)], std::string(static_cast<std::size_t>(bar), '#').c_str());
  }
}

}  // namespace

std::string version_string() {
  return std::string("pilotstack ") + PILOTSTACK_VERSION + " (checkpoint format " +
         std::to_string(nn::kCheckpointVersion) + ")";
}

AppConfig resolve_config(const std::optional<std::string>& path) {
  AppConfig config = path ? load_config(*path) : AppConfig{};
  config.validate();
  return config;
}

int run_check(const CheckArgs& args) {
  const AppConfig config = resolve_config(args.config);
  Track track(load_track_for(config));
  std::printf("config: OK (track %s, %.2f m)\n", config.track_path.c_str(), track.length());
  const FiraReport report = check_fira_constraints(config.vehicle);
  if (report.pass) {
    std::printf("FIRA constraints: PASS\n");
    return kOk;
  }
  std::printf("FIRA constraints: FAIL\n");
  for (const auto& v : report.violations) std::printf("  %s\n", v.c_str());
  return kInvalid;
}

int run_synth(const SynthArgs& args) {
  AppConfig config = resolve_config(args.config);
  if (args.noise) config.synth.noise_level = *args.noise;
  config.validate();
  const Track track(load_track_for(config));
  const std::uint64_t seed = args.seed.value_or(config.train.seed);
  const auto report = synthesize_dataset(track, args.samples, seed, args.out, config.synth_options(),
                                         [](std::string_view msg) { std::fprintf(stderr, "%.*s\n", static_cast<int>(msg.size()), msg.data()); });
  std::printf("wrote %zu records to %s (%zu episodes, %zu discarded)\n", report.records, report.dir.string().c_str(),
              report.episodes, report.failed_episodes);
  return kOk;
}

int run_train(const TrainArgs& args) {
  AppConfig config = resolve_config(args.config);
  if (args.epochs) config.train.epochs = *args.epochs;
  if (args.seed) config.train.seed = *args.seed;
  if (args.batch_size) config.train.batch_size = *args.batch_size;
  config.validate();
  const Dataset dataset = load_sessions(session_dirs(args.data));
  if (dataset.empty()) throw ValidationError("no records found");
  std::printf("training on %zu samples for %zu epochs (seed %llu)\n", dataset.size(), config.train.epochs,
              static_cast<unsigned long long>(config.train.seed));
  const auto result = nn::train(dataset, config.train, nn::default_architecture(), [&](const nn::EpochLoss& e) {
    std::printf("epoch %3zu/%zu  train_loss %.6f  val_loss %.6f\n", e.epoch, config.train.epochs, e.train_loss,
                e.val_loss);
    std::fflush(stdout);
  });
  const fs::path out(args.out);
  nn::save_params(result.params, out);
  fs::path csv = out;
  csv.replace_extension(".csv");
  nn::write_loss_csv(result.history, csv);
  std::printf("best epoch %zu; wrote %s and %s\n", result.best_epoch, out.string().c_str(), csv.string().c_str());
  return kOk;
}

int run_autopilot(const AutopilotArgs& args) {
  const AppConfig config = resolve_config(args.config);
  if (args.episodes < 1) throw ValidationError("--episodes must be >= 1");
  const Track track(load_track_for(config));
  const nn::ModelParams params = nn::load_params(args.model);
  const auto traces = run_episodes(config, track, params, args.episodes, args.max_steps);
  for (std::size_t k = 0; k < traces.size(); ++k) {
    const fs::path path = episode_path(args.out, k);
    write_trace_jsonl(traces[k], path);
    const LapMetrics m = score_episode(traces[k], track);
    std::printf("episode %zu: %zu steps, %s -> %s\n%s", k + 1, traces[k].rows.size(),
                to_string(traces[k].termination).c_str(), path.string().c_str(), metrics_table(m).c_str());
  }
  return kOk;
}

int run_eval(const EvalArgs& args) {
  const AppConfig config = resolve_config(args.config);
  if (args.trace.has_value() == args.model.has_value()) throw ValidationError("give exactly one of --trace or --model");
  const Track track(load_track_for(config));
  std::vector<EpisodeTrace> traces;
  if (args.trace) {
    traces.push_back(read_trace_jsonl(*args.trace, config.pilot.dt_s()));
  } else {
    traces = run_episodes(config, track, nn::load_params(*args.model), args.episodes, args.max_steps);
  }
  nlohmann::ordered_json report = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < traces.size(); ++k) {
    const LapMetrics m = score_episode(traces[k], track);
    if (traces.size() > 1) std::printf("episode %zu\n", k + 1);
    std::printf("%s", metrics_table(m).c_str());
    report.push_back(metrics_to_json(m));
  }
  if (args.json_out) {
    std::ofstream out(*args.json_out, std::ios::trunc);
    if (!out) throw DataError("cannot write " + *args.json_out);
    out << (traces.size() == 1 ? report[0] : report).dump(2) << '\n';
  }
  return kOk;
}

int run_dataset_stats(const StatsArgs& args) {
  const Dataset dataset = load_sessions(session_dirs(args.data));
  std::vector<double> steering;
  std::vector<double> throttle;
  for (const auto& s : dataset.samples) {
    steering.push_back(s.steering);
    throttle.push_back(s.throttle);
  }
  std::printf("sessions: %zu\n", dataset.session_ids.size());
  std::printf("records: %zu\n", dataset.size());
  std::printf("image size: %zux%zu\n", dataset.width(), dataset.height());
  print_histogram("steering", steering);
  print_histogram("throttle", throttle);
  std::printf("integrity: OK\n");
  return kOk;
}

int run_drive(const DriveArgs& args) {
  const AppConfig config = resolve_config(args.config);
  teleop::SimOptions options;
  options.track = load_track_for(config);
  options.vehicle = config.vehicle;
  options.camera = config.camera;
  options.pilot = config.pilot;
  options.sessions_root = args.sessions;
  if (args.model) {
    options.model = nn::load_params(*args.model);
    options.initial_mode = teleop::DriveMode::Autopilot;
  }
  teleop::SimContext sim(std::move(options));
  teleop::TeleopServer server(sim, args.host, args.port, args.ui_root);
  server.start();
  sim.start();
  std::printf("serving on http://%s:%u (WebSocket /ws, %s mode)\n", args.host.c_str(), server.port(),
              args.model ? "autopilot" : "human");
  std::fflush(stdout);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto started = std::chrono::steady_clock::now();
  while (!g_interrupted) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    if (args.duration_s > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count() >= args.duration_s) {
      break;
    }
  }
  sim.stop();
  server.stop();
  std::printf("stopped after %llu steps\n", static_cast<unsigned long long>(sim.steps()));
  return kOk;
}

}  // namespace pilot::cli
