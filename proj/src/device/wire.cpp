#include "smartclass/device/wire.hpp"

#include <array>
#include <utility>

namespace smartclass::device {

using nlohmann::json;

const char* to_string(Errc e) noexcept {
    switch (e) {
        case Errc::DecodeError: return "DecodeError";
        case Errc::FrameTooLong: return "FrameTooLong";
        case Errc::InvalidMessage: return "InvalidMessage";
        case Errc::InvalidStream: return "InvalidStream";
        case Errc::ScriptError: return "ScriptError";
        case Errc::ConnectionLost: return "ConnectionLost";
    }
    return "?";
}

namespace {

constexpr std::array<std::pair<MessageType, const char*>, 7> kTypeNames{{
    {MessageType::Hello, "Hello"},
    {MessageType::RfidScan, "RfidScan"},
    {MessageType::WifiJoin, "WifiJoin"},
    {MessageType::SensorReport, "SensorReport"},
    {MessageType::ActuatorCmd, "ActuatorCmd"},
    {MessageType::DisplayText, "DisplayText"},
    {MessageType::Ack, "Ack"},
}};

enum class Kind { String, Int, Number, Bool, Strings };

struct Field {
    const char* name;
    Kind kind;
    bool required;
    std::initializer_list<const char*> allowed = {};
};

std::vector<Field> schema(MessageType type) {
    switch (type) {
        case MessageType::Hello:
            return {{"node_type", Kind::String, true, {"attendance", "eco"}}, {"room_id", Kind::String, true}};
        case MessageType::RfidScan: return {{"ts", Kind::Int, true}, {"tag_uid", Kind::String, true}};
        case MessageType::WifiJoin:
            return {{"ts", Kind::Int, true}, {"mac", Kind::String, true}, {"network_id", Kind::String, true}};
        case MessageType::SensorReport:
            return {{"ts", Kind::Int, true},
                    {"temp_c", Kind::Number, true},
                    {"humidity_pct", Kind::Number, true},
                    {"light_raw", Kind::Int, true},
                    {"air_raw", Kind::Int, true}};
        case MessageType::ActuatorCmd:
            return {{"actuator", Kind::String, true, {"hvac", "lighting", "ventilation"}},
                    {"on", Kind::Bool, true},
                    {"cause", Kind::String, true}};
        case MessageType::DisplayText: return {{"lines", Kind::Strings, true}};
        case MessageType::Ack:
            return {{"ok", Kind::Bool, true},
                    {"completes", Kind::Bool, false},
                    {"reason", Kind::String, false},
                    {"student_id", Kind::String, false},
                    {"detail", Kind::String, false}};
    }
    return {};
}

bool has_kind(const json& v, Kind kind) {
    switch (kind) {
        case Kind::String: return v.is_string();
        case Kind::Int:
            return v.is_number_integer() &&
                   (!v.is_number_unsigned() || v.get<std::uint64_t>() <= static_cast<std::uint64_t>(INT64_MAX));
        case Kind::Number: return v.is_number();
        case Kind::Bool: return v.is_boolean();
        case Kind::Strings:
            if (!v.is_array()) return false;
            for (const auto& e : v) {
                if (!e.is_string()) return false;
            }
            return true;
    }
    return false;
}

void check_body(MessageType type, const json& body, Errc errc) {
    if (!body.is_object()) throw DeviceError(errc, "body must be an object");
    const auto fields = schema(type);
    for (const auto& f : fields) {
        auto it = body.find(f.name);
        if (it == body.end()) {
            if (f.required) throw DeviceError(errc, std::string("body.") + f.name + " missing");
            continue;
        }
        if (!has_kind(*it, f.kind)) throw DeviceError(errc, std::string("body.") + f.name + " has the wrong type");
        if (f.allowed.size() > 0) {
            bool ok = false;
            for (const char* a : f.allowed) ok |= it->get_ref<const std::string&>() == a;
            if (!ok) throw DeviceError(errc, std::string("body.") + f.name + " has an unknown value");
        }
    }
    for (const auto& [key, value] : body.items()) {
        bool known = false;
        for (const auto& f : fields) known |= key == f.name;
        if (!known) throw DeviceError(errc, "body." + key + " is not a field of " + to_string(type));
    }
}

}  // namespace

const char* to_string(MessageType t) noexcept {
    for (const auto& [type, name] : kTypeNames) {
        if (type == t) return name;
    }
    return "?";
}

std::optional<MessageType> message_type_from_string(std::string_view s) noexcept {
    for (const auto& [type, name] : kTypeNames) {
        if (s == name) return type;
    }
    return std::nullopt;
}

void check_message(const WireMessage& msg) {
    if (msg.node_id.empty()) throw DeviceError(Errc::InvalidMessage, "node_id is empty");
    check_body(msg.type, msg.body, Errc::InvalidMessage);
}

std::string encode_message(const WireMessage& msg) {
    check_message(msg);
    json j{{"type", to_string(msg.type)}, {"node_id", msg.node_id}, {"seq", msg.seq}, {"body", msg.body}};
    std::string out;
    try {
        out = j.dump();
    } catch (const json::exception& e) {
        throw DeviceError(Errc::InvalidMessage, e.what());
    }
    if (out.size() > kMaxFrameBytes) throw DeviceError(Errc::FrameTooLong, std::to_string(out.size()) + " bytes");
    out += '\n';
    return out;
}

WireMessage decode_message(std::string_view frame) {
    if (!frame.empty() && frame.back() == '\n') frame.remove_suffix(1);
    if (frame.size() > kMaxFrameBytes) throw DeviceError(Errc::FrameTooLong, std::to_string(frame.size()) + " bytes");

    json j;
    try {
        j = json::parse(frame);
    } catch (const json::exception& e) {
        throw DeviceError(Errc::DecodeError, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw DeviceError(Errc::DecodeError, "frame is not an object");
    for (const auto& [key, value] : j.items()) {
        if (key != "type" && key != "node_id" && key != "seq" && key != "body") {
            throw DeviceError(Errc::DecodeError, "unknown field " + key);
        }
    }
    auto type = j.find("type");
    if (type == j.end() || !type->is_string()) throw DeviceError(Errc::DecodeError, "type missing");
    auto parsed_type = message_type_from_string(type->get_ref<const std::string&>());
    if (!parsed_type) throw DeviceError(Errc::DecodeError, "unknown type " + type->get<std::string>());

    WireMessage msg;
    msg.type = *parsed_type;
    auto node = j.find("node_id");
    if (node == j.end() || !node->is_string() || node->get_ref<const std::string&>().empty()) {
        throw DeviceError(Errc::DecodeError, "node_id missing");
    }
    msg.node_id = node->get<std::string>();
    auto seq = j.find("seq");
    if (seq == j.end() || !seq->is_number_unsigned()) throw DeviceError(Errc::DecodeError, "seq missing");
    msg.seq = seq->get<std::uint64_t>();
    auto body = j.find("body");
    if (body == j.end()) throw DeviceError(Errc::DecodeError, "body missing");
    check_body(msg.type, *body, Errc::DecodeError);
    msg.body = std::move(*body);
    return msg;
}

void FrameReader::feed(std::string_view bytes) {
    if (start_ > 0 && start_ == buffer_.size()) {
        buffer_.clear();
        start_ = 0;
    }
    buffer_.append(bytes);
}

std::optional<std::string> FrameReader::next_frame() {
    const auto nl = buffer_.find('\n', start_);
    if (nl == std::string::npos) {
        if (pending() > kMaxFrameBytes) throw DeviceError(Errc::FrameTooLong, std::to_string(pending()) + " bytes pending");
        return std::nullopt;
    }
    if (nl - start_ > kMaxFrameBytes) throw DeviceError(Errc::FrameTooLong, std::to_string(nl - start_) + " bytes");
    std::string frame = buffer_.substr(start_, nl - start_);
    start_ = nl + 1;
    if (start_ > 4096 && start_ * 2 > buffer_.size()) {
        buffer_.erase(0, start_);
        start_ = 0;
    }
    return frame;
}

WireMessage make_ack(const WireMessage& acked, const std::string& node_id, json extra) {
    WireMessage ack{MessageType::Ack, node_id, acked.seq, json{{"ok", true}}};
    for (auto& [k, v] : extra.items()) ack.body[k] = v;
    return ack;
}

}  // namespace smartclass::device
