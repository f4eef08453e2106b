#include "pilotstack/teleop/sim_context.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>

#include "pilotstack/error.hpp"

namespace pilot::teleop {

void Outbox::push_control(std::string message) {
  {
    std::lock_guard lock(mutex_);
    control_.push_back(std::move(message));
  }
  if (notify_) notify_();
}

void Outbox::push_frame(std::string message) {
  {
    std::lock_guard lock(mutex_);
    if (frames_.size() == kFrameDepth) {
      frames_.pop_front();
      ++dropped_;
    }
    frames_.push_back(std::move(message));
  }
  if (notify_) notify_();
}

std::optional<std::string> Outbox::pop() {
  std::lock_guard lock(mutex_);
  auto& queue = control_.empty() ? frames_ : control_;
  if (queue.empty()) return std::nullopt;
  std::string out = std::move(queue.front());
  queue.pop_front();
  return out;
}

std::size_t Outbox::dropped_frames() const {
  std::lock_guard lock(mutex_);
  return dropped_;
}

std::size_t Outbox::pending() const {
  std::lock_guard lock(mutex_);
  return control_.size() + frames_.size();
}

SimContext::SimContext(SimOptions options)
    : options_(std::move(options)),
      track_(options_.track),
      dt_s_(0.0),
      mode_(options_.initial_mode) {
  options_.vehicle.validate();
  options_.camera.validate();
  options_.pilot.validate();
  dt_s_ = options_.pilot.dt_s();
  if (mode_ == DriveMode::Autopilot && !options_.model) throw ValidationError("autopilot mode needs a model");
  state_ = options_.start.value_or(VehicleState{});
  if (!options_.start) {
    const Vec2 p = track_.point_at(0.0);
    state_ = {p.x, p.y, track_.heading_at(0.0), 0.0};
  }
}

SimContext::~SimContext() {
  stop();
  std::lock_guard lock(world_mutex_);
  if (writer_) {
    try {
      writer_->close();
    } catch (...) {
    }
  }
}

ConnectionId SimContext::connect(std::shared_ptr<Outbox> outbox) {
  ConnectionId id;
  {
    std::lock_guard lock(connections_mutex_);
    id = next_id_++;
    connections_[id] = {std::move(outbox)};
  }
  send_control(id, encode(status_for(id)));
  return id;
}

void SimContext::disconnect(ConnectionId id) {
  bool was_driver = false;
  {
    std::lock_guard lock(connections_mutex_);
    was_driver = driver_locked() == id;
    connections_.erase(id);
  }
  if (was_driver) broadcast_status();
}

void SimContext::submit(ConnectionId id, ClientMessage message) {
  std::lock_guard lock(inbox_mutex_);
  inbox_.push_back({id, std::move(message)});
}

void SimContext::start() {
  if (thread_.joinable()) return;
  stop_requested_ = false;
  thread_ = std::thread([this] {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(dt_s_));
    auto next = clock::now();
    while (!stop_requested_) {
      try {
        step_once();
      } catch (const std::exception& e) {
        std::cerr << "simulation step failed: " << e.what() << '\n';
      }
      next += period;
      const auto now = clock::now();
      if (next < now) next = now;  // do not try to catch up after a stall
      std::this_thread::sleep_until(next);
    }
  });
}

void SimContext::stop() {
  stop_requested_ = true;
  if (thread_.joinable()) thread_.join();
}

void SimContext::send_control(ConnectionId id, const std::string& message) {
  std::shared_ptr<Outbox> box;
  {
    std::lock_guard lock(connections_mutex_);
    const auto it = connections_.find(id);
    if (it == connections_.end()) return;
    box = it->second.outbox;
  }
  box->push_control(message);
}

std::optional<ConnectionId> SimContext::driver_locked() const {
  if (connections_.empty()) return std::nullopt;
  return connections_.begin()->first;
}

std::optional<ConnectionId> SimContext::driver() const {
  std::lock_guard lock(connections_mutex_);
  return driver_locked();
}

Status SimContext::status_for(ConnectionId id) const {
  Status s;
  {
    std::lock_guard lock(world_mutex_);
    s.recording = writer_.has_value();
    s.mode = mode_;
    if (writer_) {
      s.session_id = writer_->dir().filename().string();
      s.records_written = writer_->record_count();
    } else if (last_session_dir_) {
      s.session_id = last_session_dir_->filename().string();
    }
  }
  s.driver = driver() == id;
  return s;
}

void SimContext::broadcast_status() {
  std::vector<std::pair<ConnectionId, std::shared_ptr<Outbox>>> targets;
  {
    std::lock_guard lock(connections_mutex_);
    for (const auto& [id, c] : connections_) targets.emplace_back(id, c.outbox);
  }
  for (const auto& [id, box] : targets) box->push_control(encode(status_for(id)));
}

std::filesystem::path SimContext::next_session_dir() const {
  for (unsigned n = 1;; ++n) {
    char name[32];
    std::snprintf(name, sizeof name, "session_%04u", n);
    auto dir = options_.sessions_root / name;
    if (!std::filesystem::exists(dir)) return dir;
  }
}

void SimContext::start_recording() {
  if (writer_) return;
  SessionManifest manifest;
  manifest.image_width = options_.camera.image_width_px;
  manifest.image_height = options_.camera.image_height_px;
  manifest.record_rate_hz = options_.pilot.loop_rate_hz;
  writer_.emplace(next_session_dir(), manifest);
  last_session_dir_ = writer_->dir();
}

void SimContext::stop_recording() {
  if (!writer_) return;
  writer_->close();
  writer_.reset();
}

bool SimContext::handle(const Pending& p, std::vector<std::pair<ConnectionId, Command>>& acks) {
  if (driver() != p.from) {
    send_control(p.from, encode(Error{"role", "only the driver connection may send this message"}));
    return false;
  }
  if (const auto* cmd = std::get_if<Command>(&p.message)) {
    if (mode_ == DriveMode::Autopilot) {
      send_control(p.from, encode(Error{"mode", "commands are ignored while the autopilot drives"}));
      return false;
    }
    command_ = {clamp_unit(cmd->steering), clamp_unit(cmd->throttle)};
    acks.emplace_back(p.from, command_);
    return false;
  }
  if (const auto* toggle = std::get_if<RecordToggle>(&p.message)) {
    try {
      toggle->on ? start_recording() : stop_recording();
    } catch (const std::exception& e) {
      send_control(p.from, encode(Error{"record", e.what()}));
      return false;
    }
    return true;
  }
  const auto& sw = std::get<ModeSwitch>(p.message);
  if (sw.mode == DriveMode::Autopilot && !options_.model) {
    send_control(p.from, encode(Error{"mode", "no model is loaded"}));
    return false;
  }
  if (sw.mode != mode_) command_ = {};
  mode_ = sw.mode;
  return true;
}

void SimContext::step_once() {
  std::deque<Pending> inbox;
  {
    std::lock_guard lock(inbox_mutex_);
    inbox.swap(inbox_);
  }

  std::vector<std::pair<ConnectionId, Command>> acks;
  std::optional<Error> record_error;
  bool status_changed = false;
  CameraFrame frame;
  ControlInput input;
  VehicleState before;
  VehicleState after;
  std::uint64_t seq = 0;
  bool recording = false;
  {
    std::lock_guard lock(world_mutex_);
    for (const auto& p : inbox) status_changed = handle(p, acks) || status_changed;

    before = state_;
    frame = render_camera_frame(track_, state_, options_.camera);
    input = mode_ == DriveMode::Autopilot ? predict(*options_.model, frame, options_.pilot)
                                          : ControlInput(command_.steering, command_.throttle);
    if (writer_) {
      try {
        const auto ts = static_cast<std::int64_t>(std::llround(static_cast<double>(steps_) * dt_s_ * 1000.0));
        writer_->append(frame, input, ts);
      } catch (const std::exception& e) {
        record_error = Error{"record", e.what()};
        writer_.reset();
        status_changed = true;
      }
    }
    state_ = step(state_, input, options_.vehicle, dt_s_);
    after = state_;
    seq = ++steps_;
    recording = writer_.has_value();
  }

  for (const auto& [id, cmd] : acks) send_control(id, encode(Ack{seq, cmd.steering, cmd.throttle, snapshot(after)}));
  if (record_error) {
    if (const auto d = driver()) send_control(*d, encode(*record_error));
  }
  if (status_changed || recording) broadcast_status();

  std::vector<std::shared_ptr<Outbox>> targets;
  {
    std::lock_guard lock(connections_mutex_);
    for (const auto& [id, c] : connections_) targets.push_back(c.outbox);
  }
  if (targets.empty()) return;
  const Frame msg{seq, frame.width(), frame.height(), frame_to_base64_ppm(frame), snapshot(before),
                  movement_vector(input, options_.camera)};
  const std::string text = encode(msg);
  for (const auto& box : targets) box->push_frame(text);
}

VehicleState SimContext::state() const {
  std::lock_guard lock(world_mutex_);
  return state_;
}

std::uint64_t SimContext::steps() const {
  std::lock_guard lock(world_mutex_);
  return steps_;
}

bool SimContext::recording() const {
  std::lock_guard lock(world_mutex_);
  return writer_.has_value();
}

std::size_t SimContext::records_written() const {
  std::lock_guard lock(world_mutex_);
  return writer_ ? writer_->record_count() : 0;
}

DriveMode SimContext::mode() const {
  std::lock_guard lock(world_mutex_);
  return mode_;
}

std::optional<std::filesystem::path> SimContext::last_session_dir() const {
  std::lock_guard lock(world_mutex_);
  return last_session_dir_;
}

}  // namespace pilot::teleop
