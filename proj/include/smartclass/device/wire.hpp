#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "smartclass/common/error.hpp"

namespace smartclass::device {

using Millis = std::int64_t;

enum class Errc { DecodeError, FrameTooLong, InvalidMessage, InvalidStream, ScriptError, ConnectionLost };
const char* to_string(Errc e) noexcept;
using DeviceError = Error<Errc>;

/// Longest accepted frame, excluding the terminating newline.
inline constexpr std::size_t kMaxFrameBytes = 64 * 1024;

enum class MessageType { Hello, RfidScan, WifiJoin, SensorReport, ActuatorCmd, DisplayText, Ack };
const char* to_string(MessageType t) noexcept;
std::optional<MessageType> message_type_from_string(std::string_view s) noexcept;

/// One protocol message. Body fields per type:
///   Hello        node_type ("attendance"|"eco"), room_id
///   RfidScan     ts, tag_uid
///   WifiJoin     ts, mac, network_id
///   SensorReport ts, temp_c, humidity_pct, light_raw, air_raw
///   ActuatorCmd  actuator ("hvac"|"lighting"|"ventilation"), on, cause
///   DisplayText  lines
///   Ack          ok, and optionally completes, reason, student_id, detail
/// An Ack carries the seq of the message it acknowledges and does not
/// consume a seq of its own.
struct WireMessage {
    MessageType type = MessageType::Hello;
    std::string node_id;
    std::uint64_t seq = 0;
    nlohmann::json body = nlohmann::json::object();

    bool operator==(const WireMessage&) const = default;
};

/// Throws DeviceError(InvalidMessage) naming the first bad field.
void check_message(const WireMessage& msg);

/// One JSON object with keys type, node_id, seq, body, then '\n'.
/// Throws InvalidMessage or FrameTooLong.
std::string encode_message(const WireMessage& msg);

/// Total over arbitrary bytes: returns a checked message or throws
/// DeviceError(DecodeError / FrameTooLong). A trailing newline is allowed.
WireMessage decode_message(std::string_view frame);

/// Splits a byte stream into newline-terminated frames.
class FrameReader {
public:
    void feed(std::string_view bytes);
    /// Next complete frame without its newline. Throws FrameTooLong once the
    /// pending partial frame exceeds kMaxFrameBytes.
    std::optional<std::string> next_frame();
    std::size_t pending() const noexcept { return buffer_.size() - start_; }

private:
    std::string buffer_;
    std::size_t start_ = 0;
};

WireMessage make_ack(const WireMessage& acked, const std::string& node_id, nlohmann::json extra = nlohmann::json::object());

}  // namespace smartclass::device
