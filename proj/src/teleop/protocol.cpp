#include "pilotstack/teleop/protocol.hpp"

#include <cmath>

#include <boost/beast/core/detail/base64.hpp>
#include <nlohmann/json.hpp>

#include "pilotstack/ppm.hpp"

namespace pilot::teleop {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace base64 = boost::beast::detail::base64;

ordered_json state_json(const StateSnapshot& s) {
  return {{"x", s.x}, {"y", s.y}, {"heading", s.heading}, {"speed", s.speed}};
}

double finite_number(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) throw ProtocolError(std::string("field '") + key + "' must be a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw ProtocolError(std::string("field '") + key + "' must be finite");
  return v;
}

}  // namespace

std::string_view to_string(DriveMode mode) { return mode == DriveMode::Human ? "human" : "autopilot"; }

DriveMode parse_drive_mode(std::string_view text) {
  if (text == "human") return DriveMode::Human;
  if (text == "autopilot") return DriveMode::Autopilot;
  throw ProtocolError("mode must be \"human\" or \"autopilot\"");
}

StateSnapshot snapshot(const VehicleState& state) {
  return {state.x_m, state.y_m, state.heading_rad, state.speed_mps};
}

ClientMessage parse_client_message(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(std::string("message is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("message must be a JSON object");
  const auto type = j.find("type");
  if (type == j.end() || !type->is_string()) throw ProtocolError("message needs a string \"type\"");
  const auto name = type->get<std::string>();
  if (name == "Command") return Command{finite_number(j, "steering"), finite_number(j, "throttle")};
  if (name == "RecordToggle") {
    const auto on = j.find("on");
    if (on == j.end() || !on->is_boolean()) throw ProtocolError("field 'on' must be a boolean");
    return RecordToggle{on->get<bool>()};
  }
  if (name == "ModeSwitch") {
    const auto mode = j.find("mode");
    if (mode == j.end() || !mode->is_string()) throw ProtocolError("field 'mode' must be a string");
    return ModeSwitch{parse_drive_mode(mode->get<std::string>())};
  }
  throw ProtocolError("unknown or server-only message type '" + name + "'");
}

std::string encode(const Frame& m) {
  ordered_json j = {{"type", "Frame"},  {"seq", m.seq},
                    {"width", m.width}, {"height", m.height},
                    {"ppm", m.ppm_base64}, {"state", state_json(m.state)}};
  if (m.overlay) {
    j["overlay"] = {{"origin", {m.overlay->origin.x, m.overlay->origin.y}},
                    {"endpoint", {m.overlay->endpoint.x, m.overlay->endpoint.y}}};
  } else {
    j["overlay"] = nullptr;
  }
  return j.dump();
}

std::string encode(const Command& m) {
  return ordered_json{{"type", "Command"}, {"steering", m.steering}, {"throttle", m.throttle}}.dump();
}

std::string encode(const RecordToggle& m) { return ordered_json{{"type", "RecordToggle"}, {"on", m.on}}.dump(); }

std::string encode(const ModeSwitch& m) {
  return ordered_json{{"type", "ModeSwitch"}, {"mode", to_string(m.mode)}}.dump();
}

std::string encode(const Status& m) {
  ordered_json j = {{"type", "Status"}, {"recording", m.recording}, {"mode", to_string(m.mode)}};
  j["session_id"] = m.session_id ? ordered_json(*m.session_id) : ordered_json(nullptr);
  j["records_written"] = m.records_written;
  j["driver"] = m.driver;
  return j.dump();
}

std::string encode(const Ack& m) {
  return ordered_json{{"type", "Ack"},
                      {"step", m.step},
                      {"steering", m.steering},
                      {"throttle", m.throttle},
                      {"state", state_json(m.state)}}
      .dump();
}

std::string encode(const Error& m) {
  return ordered_json{{"type", "Error"}, {"code", m.code}, {"message", m.message}}.dump();
}

std::string frame_to_base64_ppm(const CameraFrame& frame) {
  const auto bytes = encode_ppm(frame);
  std::string out(base64::encoded_size(bytes.size()), '\0');
  out.resize(base64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

CameraFrame frame_from_base64_ppm(std::string_view text) {
  if (text.size() % 4 != 0) throw ProtocolError("frame payload is not valid base64");
  std::size_t body = text.size();
  while (body > 0 && text.size() - body < 2 && text[body - 1] == '=') --body;
  std::vector<std::uint8_t> bytes(base64::decoded_size(text.size()));
  const auto [written, read] = base64::decode(bytes.data(), text.data(), body);
  if (read != body) throw ProtocolError("frame payload is not valid base64");
  bytes.resize(written);
  return decode_ppm(bytes, "frame");
}

}  // namespace pilot::teleop
