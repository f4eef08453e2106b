#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pilotstack/autopilot.hpp"
#include "pilotstack/dataset.hpp"
#include "pilotstack/nn/model.hpp"
#include "pilotstack/teleop/protocol.hpp"
#include "pilotstack/track.hpp"

namespace pilot::teleop {

/// Outbound messages for one connection. Control messages (Status, Ack,
/// Error) are never dropped; frames keep only the newest two.
class Outbox {
 public:
  static constexpr std::size_t kFrameDepth = 2;

  /// `notify` runs on the pushing thread after every push.
  explicit Outbox(std::function<void()> notify = {}) : notify_(std::move(notify)) {}

  void push_control(std::string message);
  void push_frame(std::string message);
  /// Control messages first, then frames oldest to newest.
  std::optional<std::string> pop();

  std::size_t dropped_frames() const;
  std::size_t pending() const;

 private:
  mutable std::mutex mutex_;
  std::deque<std::string> control_;
  std::deque<std::string> frames_;
  std::size_t dropped_ = 0;
  std::function<void()> notify_;
};

using ConnectionId = std::uint64_t;

struct SimOptions {
  TrackSpec track = default_track();
  VehicleParams vehicle;
  CameraModel camera;
  PilotConfig pilot;
  std::optional<nn::ModelParams> model;
  std::filesystem::path sessions_root = "sessions";
  std::optional<VehicleState> start;  // defaults to the start line at rest
  DriveMode initial_mode = DriveMode::Human;
};

/// The simulated world behind the teleop service. Only the stepping thread
/// touches world state; connections talk to it through submit() and their
/// Outbox. The first connection is the driver; the role passes to the
/// oldest remaining connection when the driver disconnects.
class SimContext {
 public:
  explicit SimContext(SimOptions options);
  ~SimContext();
  SimContext(const SimContext&) = delete;
  SimContext& operator=(const SimContext&) = delete;

  ConnectionId connect(std::shared_ptr<Outbox> outbox);
  void disconnect(ConnectionId id);
  /// Queued and handled at the start of the next step.
  void submit(ConnectionId id, ClientMessage message);

  /// Steps at pilot.loop_rate_hz on a background thread, paced by the wall clock.
  void start();
  void stop();
  bool running() const { return thread_.joinable(); }

  /// Runs one simulation step on the calling thread. Not for use while running().
  void step_once();

  VehicleState state() const;
  std::uint64_t steps() const;
  bool recording() const;
  std::size_t records_written() const;
  DriveMode mode() const;
  std::optional<ConnectionId> driver() const;
  std::optional<std::filesystem::path> last_session_dir() const;

 private:
  struct Pending {
    ConnectionId from;
    ClientMessage message;
  };
  struct Connection {
    std::shared_ptr<Outbox> outbox;
  };

  /// Runs under world_mutex_; returns whether the Status changed.
  bool handle(const Pending& p, std::vector<std::pair<ConnectionId, Command>>& acks);
  void start_recording();
  void stop_recording();
  Status status_for(ConnectionId id) const;
  void broadcast_status();
  void send_control(ConnectionId id, const std::string& message);
  std::optional<ConnectionId> driver_locked() const;
  std::filesystem::path next_session_dir() const;

  SimOptions options_;
  Track track_;
  double dt_s_;

  // World state: written only by the stepping thread, under world_mutex_.
  mutable std::mutex world_mutex_;
  VehicleState state_;
  std::uint64_t steps_ = 0;
  Command command_;
  DriveMode mode_;
  std::optional<SessionWriter> writer_;
  std::optional<std::filesystem::path> last_session_dir_;

  mutable std::mutex connections_mutex_;
  std::map<ConnectionId, Connection> connections_;
  ConnectionId next_id_ = 1;

  std::mutex inbox_mutex_;
  std::deque<Pending> inbox_;

  std::atomic<bool> stop_requested_{false};
  std::thread thread_;
};

}  // namespace pilot::teleop
