#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "pilotstack/autopilot.hpp"
#include "pilotstack/camera.hpp"
#include "pilotstack/vehicle.hpp"

namespace pilot::teleop {

inline constexpr const char* kSubprotocol = "pilotstack.v1";

enum class DriveMode { Human, Autopilot };

std::string_view to_string(DriveMode mode);
DriveMode parse_drive_mode(std::string_view text);

struct StateSnapshot {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
};

StateSnapshot snapshot(const VehicleState& state);

struct Frame {
  std::uint64_t seq = 0;
  std::size_t width = 0;
  std::size_t height = 0;
  std::string ppm_base64;
  StateSnapshot state;
  std::optional<MovementVector> overlay;
};

struct Command {
  double steering = 0.0;
  double throttle = 0.0;
};

struct RecordToggle {
  bool on = false;
};

struct ModeSwitch {
  DriveMode mode = DriveMode::Human;
};

struct Status {
  bool recording = false;
  DriveMode mode = DriveMode::Human;
  std::optional<std::string> session_id;
  std::size_t records_written = 0;
  bool driver = false;  // whether the receiving connection holds the driver role
};

/// Reply to a Command once the step that applied it has run.
struct Ack {
  std::uint64_t step = 0;
  double steering = 0.0;
  double throttle = 0.0;
  StateSnapshot state;
};

/// Non-fatal rejection, e.g. a Command from a viewer ("role") or during
/// autopilot ("mode").
struct Error {
  std::string code;
  std::string message;
};

using ClientMessage = std::variant<Command, RecordToggle, ModeSwitch>;

/// A message that does not follow the protocol; the connection is closed.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses one text frame from a client. Unknown types, missing or mistyped
/// fields and non-finite numbers raise ProtocolError.
ClientMessage parse_client_message(std::string_view text);

std::string encode(const Frame& m);
std::string encode(const Command& m);
std::string encode(const RecordToggle& m);
std::string encode(const ModeSwitch& m);
std::string encode(const Status& m);
std::string encode(const Ack& m);
std::string encode(const Error& m);

/// Base64 of the binary PPM encoding of `frame`.
std::string frame_to_base64_ppm(const CameraFrame& frame);
CameraFrame frame_from_base64_ppm(std::string_view text);

}  // namespace pilot::teleop
