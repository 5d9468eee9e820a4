#include "smartclass/device/node.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "smartclass/common/text.hpp"

namespace smartclass::device {

using nlohmann::json;

const char* to_string(NodeType t) noexcept { return t == NodeType::AttendanceNode ? "attendance" : "eco"; }

std::optional<NodeType> node_type_from_string(std::string_view s) noexcept {
    if (s == "attendance") return NodeType::AttendanceNode;
    if (s == "eco") return NodeType::EcoNode;
    return std::nullopt;
}

std::vector<std::string> render_display(const DisplayState& state) {
    std::vector<std::string> out;
    for (const auto& line : state.lines) {
        if (out.size() == kDisplayRows) break;
        out.push_back(line.substr(0, std::min(line.size(), kDisplayColumns)));
    }
    return out;
}

DisplayState display_for_ack(bool completes, std::string_view reason) {
    if (completes) return {{"Attendance Taken!"}};
    if (reason == "NoWifi") return {{"Card read", "Join class WiFi"}};
    if (reason == "NoRfid") return {{"WiFi seen", "Tap your card"}};
    return {{"Not accepted", std::string(reason)}};
}

namespace {

[[noreturn]] void script_error(std::size_t line, const std::string& what) {
    throw DeviceError(Errc::ScriptError, "line " + std::to_string(line) + ": " + what);
}

template <typename T>
T number(std::string_view field, std::size_t line, const char* name) {
    T value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        script_error(line, std::string("bad ") + name + " '" + std::string(field) + "'");
    }
    return value;
}

}  // namespace

ScriptAction parse_action(std::string_view line, std::size_t line_number) {
    const auto f = text::split_fields(line);
    if (f.size() < 2) script_error(line_number, "expected '<ts> <action> ...'");
    ScriptAction a;
    a.line = line_number;
    a.ts = number<Millis>(f[0], line_number, "timestamp");
    if (a.ts < 0) script_error(line_number, "negative timestamp");
    const auto action = f[1];
    auto arity = [&](std::size_t lo, std::size_t hi) {
        if (f.size() - 2 < lo || f.size() - 2 > hi) {
            script_error(line_number, std::string(action) + " takes " + std::to_string(lo) +
                                          (lo == hi ? "" : "-" + std::to_string(hi)) + " arguments");
        }
    };
    if (action == "press") {
        arity(1, 3);
        a.kind = ActionKind::Press;
        a.tag = f[2];
        if (f.size() > 3) a.hold_ms = number<Millis>(f[3], line_number, "hold_ms");
        if (f.size() > 4) a.bounces = number<int>(f[4], line_number, "bounces");
        if (a.hold_ms <= 0 || a.bounces < 0) script_error(line_number, "hold_ms must be positive, bounces >= 0");
    } else if (action == "glitch") {
        arity(1, 2);
        a.kind = ActionKind::Glitch;
        a.tag = f[2];
        if (f.size() > 3) a.width = number<std::size_t>(f[3], line_number, "width");
        if (a.width == 0) script_error(line_number, "width must be positive");
    } else if (action == "rfid") {
        arity(1, 1);
        a.kind = ActionKind::Rfid;
        a.tag = f[2];
    } else if (action == "wifi") {
        arity(2, 2);
        a.kind = ActionKind::Wifi;
        a.mac = f[2];
        a.network_id = f[3];
    } else if (action == "sensor") {
        arity(4, 4);
        a.kind = ActionKind::Sensor;
        a.sensor.timestamp = a.ts;
        a.sensor.temp_c = number<double>(f[2], line_number, "temperature");
        a.sensor.humidity_pct = number<double>(f[3], line_number, "humidity");
        a.sensor.lux_raw = number<int>(f[4], line_number, "light_raw");
        a.sensor.air_raw = number<int>(f[5], line_number, "air_raw");
    } else if (action == "idle") {
        arity(0, 0);
        a.kind = ActionKind::Idle;
    } else {
        script_error(line_number, "unknown action '" + std::string(action) + "'");
    }
    return a;
}

ScenarioScript parse_script(std::istream& in) {
    ScenarioScript script;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        script.actions.push_back(parse_action(t, n));
    }
    return script;
}

void validate_script(const NodeDescriptor& node, const ScenarioScript& script) {
    Millis last = 0;
    for (const auto& a : script.actions) {
        if (a.ts < last) script_error(a.line, "timestamp goes backwards");
        last = a.ts;
        const bool attendance_only = a.kind == ActionKind::Press || a.kind == ActionKind::Glitch ||
                                     a.kind == ActionKind::Rfid || a.kind == ActionKind::Wifi;
        if (attendance_only && node.node_type != NodeType::AttendanceNode) {
            script_error(a.line, "only attendance nodes scan cards or join WiFi");
        }
        if (a.kind == ActionKind::Sensor && node.node_type != NodeType::EcoNode) {
            script_error(a.line, "only eco nodes report sensors");
        }
    }
}

std::vector<PlannedMessage> plan_node(const NodeDescriptor& node, const ScenarioScript& script,
                                      const NodeOptions& options) {
    validate_script(node, script);
    if (options.poll_period_ms <= 0) throw DeviceError(Errc::ScriptError, "poll period must be positive");
    std::vector<PlannedMessage> out;
    auto scans = [&](const ButtonSampleStream& stream, const std::string& tag) {
        for (const auto& e : debounce(stream, options.stable_samples)) {
            if (e.kind == EdgeKind::Rising) out.push_back({e.timestamp, MessageType::RfidScan, {{"ts", e.timestamp}, {"tag_uid", tag}}});
        }
    };

    std::optional<Millis> first_sensor;
    Millis last_action = 0;
    for (const auto& a : script.actions) {
        last_action = a.ts;
        switch (a.kind) {
            case ActionKind::Press:
                scans(synthesize_press(a.ts, a.hold_ms, a.bounces, options.sample_period_ms, options.stable_samples), a.tag);
                break;
            case ActionKind::Glitch:
                scans(synthesize_glitch(a.ts, a.width, options.sample_period_ms, options.stable_samples), a.tag);
                break;
            case ActionKind::Rfid: out.push_back({a.ts, MessageType::RfidScan, {{"ts", a.ts}, {"tag_uid", a.tag}}}); break;
            case ActionKind::Wifi:
                out.push_back({a.ts, MessageType::WifiJoin, {{"ts", a.ts}, {"mac", a.mac}, {"network_id", a.network_id}}});
                break;
            case ActionKind::Sensor:
                if (!first_sensor) first_sensor = a.ts;
                break;
            case ActionKind::Idle: break;
        }
    }

    if (first_sensor) {
        std::size_t next = 0;
        const ecosmart::TraceRow* current = nullptr;
        for (Millis t = *first_sensor; t <= last_action; t += options.poll_period_ms) {
            while (next < script.actions.size() && script.actions[next].ts <= t) {
                if (script.actions[next].kind == ActionKind::Sensor) current = &script.actions[next].sensor;
                ++next;
            }
            out.push_back({t, MessageType::SensorReport,
                           {{"ts", t},
                            {"temp_c", current->temp_c},
                            {"humidity_pct", current->humidity_pct},
                            {"light_raw", current->lux_raw},
                            {"air_raw", current->air_raw}}});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const PlannedMessage& a, const PlannedMessage& b) { return a.ts < b.ts; });
    return out;
}

void LoopbackConnection::send(const WireMessage& msg) {
    const auto frame = encode_message(msg);
    for (const auto& reply : handler_(decode_message(frame))) inbox_.push_back(encode_message(reply));
}

WireMessage LoopbackConnection::receive() {
    if (inbox_.empty()) throw DeviceError(Errc::ConnectionLost, "no reply pending");
    auto frame = std::move(inbox_.front());
    inbox_.pop_front();
    return decode_message(frame);
}

std::string Transcript::format() const {
    std::string out;
    for (const auto& e : entries) {
        auto frame = encode_message(e.message);
        out += std::to_string(e.ts) + (e.direction == Direction::Sent ? " > " : " < ") + frame;
    }
    if (error) out += "! " + *error + "\n";
    return out;
}

std::size_t Transcript::count(Direction d, MessageType t) const {
    return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [&](const TranscriptEntry& e) {
        return e.direction == d && e.message.type == t;
    }));
}

NodeRunner::NodeRunner(NodeDescriptor node, Connection& connection, NodeOptions options)
    : node_(std::move(node)), connection_(connection), options_(options) {}

void NodeRunner::hello(Millis ts) {
    exchange(ts, MessageType::Hello, {{"node_type", to_string(node_.node_type)}, {"room_id", node_.room_id}});
}

void NodeRunner::send(const PlannedMessage& planned) { exchange(planned.ts, planned.type, planned.body); }

void NodeRunner::exchange(Millis ts, MessageType type, json body) {
    WireMessage msg{type, node_.node_id, next_seq_++, std::move(body)};
    connection_.send(msg);
    transcript_.entries.push_back({ts, Direction::Sent, msg});
    for (;;) {
        auto in = connection_.receive();
        transcript_.entries.push_back({ts, Direction::Received, in});
        if (in.type == MessageType::Ack) {
            if (in.seq == msg.seq) return;
            continue;
        }
        if (in.type == MessageType::DisplayText) {
            transcript_.display.lines = in.body.at("lines").get<std::vector<std::string>>();
        } else if (in.type == MessageType::ActuatorCmd) {
            auto actuator = ecosmart::actuator_from_string(in.body.at("actuator").get<std::string>());
            if (actuator) transcript_.actuators.set(*actuator, in.body.at("on").get<bool>());
        }
        auto ack = make_ack(in, node_.node_id);
        connection_.send(ack);
        transcript_.entries.push_back({ts, Direction::Sent, ack});
    }
}

Transcript run_node(const NodeDescriptor& node, const ScenarioScript& script, Connection& connection,
                    const NodeOptions& options) {
    const auto plan = plan_node(node, script, options);
    NodeRunner runner(node, connection, options);
    try {
        runner.hello(0);
        for (const auto& p : plan) runner.send(p);
    } catch (const DeviceError& e) {
        if (e.code() != Errc::ConnectionLost && e.code() != Errc::DecodeError && e.code() != Errc::FrameTooLong) throw;
        runner.transcript().error = e.what();
    }
    return runner.transcript();
}

}  // namespace smartclass::device
