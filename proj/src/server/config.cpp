#include "smartclass/server/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

namespace smartclass::server {

using nlohmann::json;

const char* to_string(Errc e) noexcept {
    switch (e) {
        case Errc::ConfigInvalid: return "ConfigInvalid";
        case Errc::StorageFailure: return "StorageFailure";
        case Errc::CorruptRecord: return "CorruptRecord";
        case Errc::UnknownSession: return "UnknownSession";
        case Errc::UnknownStudent: return "UnknownStudent";
        case Errc::UnknownDocument: return "UnknownDocument";
        case Errc::UnknownNode: return "UnknownNode";
        case Errc::UnknownRoom: return "UnknownRoom";
        case Errc::Conflict: return "Conflict";
        case Errc::BadRequest: return "BadRequest";
        case Errc::ScenarioError: return "ScenarioError";
    }
    return "?";
}

namespace {

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : "; ") + s;
    return out;
}

// Walks one JSON object, collecting violations instead of stopping.
class Section {
public:
    Section(const json& node, std::string path, std::vector<std::string>& errors)
        : node_(node), path_(std::move(path)), errors_(errors) {
        if (!node_.is_object()) errors_.push_back(path_ + ": expected an object");
    }

    ~Section() {
        if (!node_.is_object()) return;
        for (const auto& [key, value] : node_.items()) {
            if (!seen_.contains(key)) errors_.push_back(name(key) + ": unknown key");
        }
    }

    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* get(const std::string& key) {
        seen_.insert(key);
        if (!node_.is_object()) return nullptr;
        auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    template <typename T>
    void read(const std::string& key, T& out, const std::function<bool(const T&)>& valid = {},
              const char* requirement = nullptr) {
        const auto* v = get(key);
        if (!v) return;
        std::optional<T> value;
        if constexpr (std::is_same_v<T, bool>) {
            if (v->is_boolean()) value = v->get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (v->is_string()) value = v->get<std::string>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (v->is_number()) value = v->get<T>();
        } else {
            if (v->is_number_integer() && (std::is_signed_v<T> || v->get<std::int64_t>() >= 0)) value = v->get<T>();
        }
        if (!value) {
            errors_.push_back(name(key) + ": wrong type");
            return;
        }
        if (valid && !valid(*value)) {
            errors_.push_back(name(key) + ": " + (requirement ? requirement : "invalid value"));
            return;
        }
        out = *value;
    }

    const json& node() const { return node_; }
    std::vector<std::string>& errors() { return errors_; }

private:
    const json& node_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::set<std::string> seen_;
};

void read_band(Section& parent, const std::string& key, std::optional<ecosmart::HysteresisBand>& band,
               ecosmart::Direction direction, bool nullable) {
    const auto* v = parent.get(key);
    if (!v) return;
    if (v->is_null() && nullable) {
        band.reset();
        return;
    }
    Section s(*v, parent.name(key), parent.errors());
    double on = band ? band->on_threshold() : 0;
    double off = band ? band->off_threshold() : 0;
    s.read<double>("on", on);
    s.read<double>("off", off);
    try {
        band.emplace(on, off, direction);
    } catch (const ecosmart::EcoError& e) {
        parent.errors().push_back(parent.name(key) + ": invalid band (on " + std::to_string(on) + ", off " +
                                  std::to_string(off) + "): " + e.detail());
    }
}

void read_curve(Section& parent, const std::string& key, ecosmart::CalibrationCurve& curve) {
    const auto* v = parent.get(key);
    if (!v) return;
    std::vector<std::pair<int, double>> points;
    bool shape_ok = v->is_array();
    if (shape_ok) {
        for (const auto& p : *v) {
            if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number()) {
                shape_ok = false;
                break;
            }
            points.emplace_back(p[0].get<int>(), p[1].get<double>());
        }
    }
    if (!shape_ok) {
        parent.errors().push_back(parent.name(key) + ": expected [[raw, value], ...]");
        return;
    }
    try {
        curve = ecosmart::CalibrationCurve(std::move(points), curve.unit());
    } catch (const ecosmart::EcoError& e) {
        parent.errors().push_back(parent.name(key) + ": " + e.detail());
    }
}

}  // namespace

ConfigInvalid::ConfigInvalid(std::vector<std::string> violations)
    : ServerError(Errc::ConfigInvalid, join(violations)), violations_(std::move(violations)) {}

PlatformConfig parse_config(const json& document) {
    PlatformConfig c;
    std::vector<std::string> errors;
    {
        Section root(document, "", errors);
        const auto positive = [](const auto& v) { return v > 0; };

        if (const auto* a = root.get("attendance")) {
            Section s(*a, "attendance", errors);
            s.read<std::int64_t>("pairing_window_ms", c.pairing_window_ms, positive, "must be positive");
            if (const auto* f = s.get("fraud")) {
                Section fs(*f, "attendance.fraud", errors);
                fs.read<bool>("proxy_scan", c.fraud_rules.proxy_scan);
                fs.read<bool>("duplicate_tag", c.fraud_rules.duplicate_tag);
                fs.read<bool>("shared_mac", c.fraud_rules.shared_mac);
            }
        }
        if (const auto* e = root.get("ecosmart")) {
            Section s(*e, "ecosmart", errors);
            std::optional<ecosmart::HysteresisBand> hvac = c.control.hvac_band, light = c.control.lighting_band,
                                                    vent = c.control.ventilation_band,
                                                    humid = c.control.humidity_vent_band;
            read_band(s, "hvac", hvac, ecosmart::Direction::RisingActivates, false);
            read_band(s, "lighting", light, ecosmart::Direction::FallingActivates, false);
            read_band(s, "ventilation", vent, ecosmart::Direction::RisingActivates, false);
            read_band(s, "humidity_ventilation", humid, ecosmart::Direction::RisingActivates, true);
            c.control.hvac_band = *hvac;
            c.control.lighting_band = *light;
            c.control.ventilation_band = *vent;
            c.control.humidity_vent_band = humid;
            s.read<std::int64_t>("poll_period_ms", c.control.poll_period_ms, positive, "must be positive");
            if (const auto* cal = s.get("calibration")) {
                Section cs(*cal, "ecosmart.calibration", errors);
                read_curve(cs, "light", c.calibration.light);
                read_curve(cs, "air", c.calibration.air);
            }
        }
        if (const auto* r = root.get("retrieval")) {
            Section s(*r, "retrieval", errors);
            s.read<std::size_t>("chunk_size", c.split.chunk_size, positive, "must be positive");
            s.read<std::size_t>("chunk_overlap", c.split.overlap);
            s.read<std::size_t>("dimension", c.embedding_dimension, positive, "must be positive");
            s.read<std::size_t>("top_k", c.top_k, positive, "must be positive");
            if (c.split.overlap >= c.split.chunk_size) {
                errors.push_back("retrieval.chunk_overlap: must be smaller than retrieval.chunk_size");
            }
        }
        if (const auto* q = root.get("quiz")) {
            Section s(*q, "quiz", errors);
            s.read<std::size_t>("num_questions", c.num_questions, positive, "must be at least 1");
        }
        if (const auto* g = root.get("generator")) {
            Section s(*g, "generator", errors);
            std::string mode = "stub";
            s.read<std::string>("mode", mode, [](const std::string& m) { return m == "stub" || m == "remote"; },
                                "must be \"stub\" or \"remote\"");
            c.generator.mode = mode == "remote" ? GeneratorMode::Remote : GeneratorMode::Stub;
            s.read<std::string>("endpoint", c.generator.remote.endpoint);
            s.read<std::string>("api_key", c.generator.remote.api_key);
            s.read<std::string>("model_id", c.generator.remote.model_id,
                                [](const std::string& m) { return !m.empty(); }, "must not be empty");
            std::int64_t timeout = c.generator.remote.timeout.count();
            s.read<std::int64_t>("timeout_ms", timeout, positive, "must be positive");
            c.generator.remote.timeout = std::chrono::milliseconds(timeout);
            if (c.generator.mode == GeneratorMode::Remote && c.generator.remote.endpoint.empty()) {
                errors.push_back("generator.endpoint: required when generator.mode is \"remote\"");
            }
        }
        if (const auto* l = root.get("server")) {
            Section s(*l, "server", errors);
            const auto port = [](const int& p) { return p >= 0 && p <= 65535; };
            s.read<std::string>("http_host", c.listen.http_host);
            s.read<int>("http_port", c.listen.http_port, port, "must be a port number");
            s.read<std::string>("device_host", c.listen.device_host);
            s.read<int>("device_port", c.listen.device_port, port, "must be a port number");
            s.read<std::string>("event_log", c.listen.event_log);
            s.read<std::string>("admin_token", c.listen.admin_token);
            s.read<bool>("durable", c.listen.durable);
        }
    }
    if (!errors.empty()) throw ConfigInvalid(std::move(errors));
    return c;
}

PlatformConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid({path.string() + ": cannot be read"});
    json document;
    try {
        document = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigInvalid({path.string() + ": " + e.what()});
    }
    auto config = parse_config(document);
    if (const char* key = std::getenv("SMARTCLASS_GENERATOR_KEY"); key && *key) config.generator.remote.api_key = key;
    return config;
}

json to_json(const PlatformConfig& c) {
    auto band = [](const ecosmart::HysteresisBand& b) { return json{{"on", b.on_threshold()}, {"off", b.off_threshold()}}; };
    auto curve = [](const ecosmart::CalibrationCurve& cc) {
        json points = json::array();
        for (const auto& [raw, value] : cc.points()) points.push_back({raw, value});
        return points;
    };
    return {
        {"attendance",
         {{"pairing_window_ms", c.pairing_window_ms},
          {"fraud",
           {{"proxy_scan", c.fraud_rules.proxy_scan},
            {"duplicate_tag", c.fraud_rules.duplicate_tag},
            {"shared_mac", c.fraud_rules.shared_mac}}}}},
        {"ecosmart",
         {{"hvac", band(c.control.hvac_band)},
          {"lighting", band(c.control.lighting_band)},
          {"ventilation", band(c.control.ventilation_band)},
          {"humidity_ventilation", c.control.humidity_vent_band ? band(*c.control.humidity_vent_band) : json(nullptr)},
          {"poll_period_ms", c.control.poll_period_ms},
          {"calibration", {{"light", curve(c.calibration.light)}, {"air", curve(c.calibration.air)}}}}},
        {"retrieval",
         {{"chunk_size", c.split.chunk_size},
          {"chunk_overlap", c.split.overlap},
          {"dimension", c.embedding_dimension},
          {"top_k", c.top_k}}},
        {"quiz", {{"num_questions", c.num_questions}}},
        {"generator",
         {{"mode", c.generator.mode == GeneratorMode::Remote ? "remote" : "stub"},
          {"endpoint", c.generator.remote.endpoint},
          {"model_id", c.generator.remote.model_id},
          {"timeout_ms", c.generator.remote.timeout.count()}}},
        {"server",
         {{"http_host", c.listen.http_host},
          {"http_port", c.listen.http_port},
          {"device_host", c.listen.device_host},
          {"device_port", c.listen.device_port},
          {"event_log", c.listen.event_log},
          {"admin_token", c.listen.admin_token},
          {"durable", c.listen.durable}}},
    };
}

}  // namespace smartclass::server
