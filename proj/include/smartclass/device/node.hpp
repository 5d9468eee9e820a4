#pragma once

#include <deque>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "smartclass/device/debounce.hpp"
#include "smartclass/device/wire.hpp"
#include "smartclass/ecosmart/ecosmart.hpp"

namespace smartclass::device {

enum class NodeType { AttendanceNode, EcoNode };
const char* to_string(NodeType t) noexcept;  ///< "attendance" | "eco"
std::optional<NodeType> node_type_from_string(std::string_view s) noexcept;

struct NodeDescriptor {
    std::string node_id;
    NodeType node_type = NodeType::AttendanceNode;
    std::string room_id;
};

inline constexpr std::size_t kDisplayRows = 4;
inline constexpr std::size_t kDisplayColumns = 21;

struct DisplayState {
    std::vector<std::string> lines{"System Ready"};
};

/// At most kDisplayRows lines of at most kDisplayColumns bytes each.
std::vector<std::string> render_display(const DisplayState& state);

/// What an attendance node shows after the server answers a scan or join.
DisplayState display_for_ack(bool completes, std::string_view reason);

enum class ActionKind { Press, Glitch, Rfid, Wifi, Sensor, Idle };

/// One scripted action. Text form, one per line:
///   <ts> press <tag> [hold_ms=200] [bounces=0]
///   <ts> glitch <tag> [width_samples=2]
///   <ts> rfid <tag>
///   <ts> wifi <mac> <network_id>
///   <ts> sensor <temp_c> <humidity_pct> <light_raw> <air_raw>
///   <ts> idle
struct ScriptAction {
    Millis ts = 0;
    ActionKind kind = ActionKind::Idle;
    std::string tag;
    Millis hold_ms = 200;
    int bounces = 0;
    std::size_t width = 2;
    std::string mac;
    std::string network_id;
    ecosmart::TraceRow sensor;
    std::size_t line = 0;
};

struct ScenarioScript {
    std::vector<ScriptAction> actions;  ///< ts non-decreasing
};

/// Throws DeviceError(ScriptError) with the line number. Blank lines and
/// '#' comments are skipped.
ScriptAction parse_action(std::string_view line, std::size_t line_number);
ScenarioScript parse_script(std::istream& in);

/// Throws ScriptError for decreasing timestamps or actions the node type
/// cannot perform.
void validate_script(const NodeDescriptor& node, const ScenarioScript& script);

struct NodeOptions {
    Millis poll_period_ms = 1000;
    Millis sample_period_ms = kDefaultSamplePeriodMs;
    std::size_t stable_samples = kDefaultStableSamples;
};

/// A message the node will send at virtual time `ts`, before seq assignment.
struct PlannedMessage {
    Millis ts = 0;
    MessageType type = MessageType::Hello;
    nlohmann::json body;
};

/// Outgoing messages in virtual-time order (stable for equal times), Hello
/// excluded. Attendance nodes turn debounced rising edges into RfidScan;
/// eco nodes report the latest sensor values every poll period from their
/// first sensor action to their last action.
std::vector<PlannedMessage> plan_node(const NodeDescriptor& node, const ScenarioScript& script,
                                      const NodeOptions& options = {});

class Connection {
public:
    virtual ~Connection() = default;
    /// Both throw DeviceError(ConnectionLost).
    virtual void send(const WireMessage& msg) = 0;
    virtual WireMessage receive() = 0;
};

/// In-process connection: every sent message goes through `handler`, whose
/// replies are queued for receive(). Messages cross the codec both ways.
class LoopbackConnection final : public Connection {
public:
    using Handler = std::function<std::vector<WireMessage>(const WireMessage&)>;
    explicit LoopbackConnection(Handler handler) : handler_(std::move(handler)) {}
    void send(const WireMessage& msg) override;
    WireMessage receive() override;

private:
    Handler handler_;
    std::deque<std::string> inbox_;
};

enum class Direction { Sent, Received };

struct TranscriptEntry {
    Millis ts = 0;
    Direction direction = Direction::Sent;
    WireMessage message;

    bool operator==(const TranscriptEntry&) const = default;
};

struct Transcript {
    std::vector<TranscriptEntry> entries;
    std::optional<std::string> error;  ///< set when the connection was lost
    ecosmart::ActuatorState actuators;
    DisplayState display;

    /// "<ts> > <frame>" for sent and "<ts> < <frame>" for received messages.
    std::string format() const;
    std::size_t count(Direction d, MessageType t) const;
};

/// Drives one node over a connection: Hello first, then each planned message
/// followed by reading until its Ack. Pushed DisplayText and ActuatorCmd
/// messages update the local display or actuator mirror and are acked.
class NodeRunner {
public:
    NodeRunner(NodeDescriptor node, Connection& connection, NodeOptions options = {});

    void hello(Millis ts = 0);
    void send(const PlannedMessage& planned);

    const NodeDescriptor& node() const noexcept { return node_; }
    const Transcript& transcript() const noexcept { return transcript_; }
    Transcript& transcript() noexcept { return transcript_; }

private:
    void exchange(Millis ts, MessageType type, nlohmann::json body);

    NodeDescriptor node_;
    Connection& connection_;
    NodeOptions options_;
    std::uint64_t next_seq_ = 1;
    Transcript transcript_;
};

/// Validates the script (ScriptError), then runs it. A lost connection ends
/// the run and is reported in Transcript::error.
Transcript run_node(const NodeDescriptor& node, const ScenarioScript& script, Connection& connection,
                    const NodeOptions& options = {});

}  // namespace smartclass::device
