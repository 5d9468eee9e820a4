#include "smartclass/server/platform.hpp"

#include <algorithm>
#include <chrono>

#include "smartclass/common/digest.hpp"

namespace smartclass::server {

using nlohmann::json;
namespace att = smartclass::attendance;
namespace eco = smartclass::ecosmart;

namespace {

constexpr std::size_t kRecentCommands = 20;

[[noreturn]] void bad_request(const std::string& field, const std::string& why = "missing or wrongly typed") {
    throw ServerError(Errc::BadRequest, field + ": " + why);
}

att::EventKind event_kind_from(const std::string& s) {
    if (s == "RfidScan") return att::EventKind::RfidScan;
    if (s == "WifiPresence") return att::EventKind::WifiPresence;
    throw ServerError(Errc::CorruptRecord, "unknown event kind " + s);
}

json result_json(const att::AttendanceResult& r, const att::Registry& registry) {
    json j{{"student_id", r.student_id},
           {"status", att::to_string(r.status)},
           {"reason", att::to_string(r.reason)},
           {"evidence", nullptr}};
    if (const auto* s = registry.find(r.student_id)) j["display_name"] = s->display_name;
    if (r.evidence) j["evidence"] = {{"rfid_seq", r.evidence->rfid_seq}, {"wifi_seq", r.evidence->wifi_seq}};
    return j;
}

std::vector<att::AttendanceResult> results_of(const PlatformState::Session& s, const att::Registry& registry,
                                              const att::FraudRules& rules) {
    if (s.session.final_results()) return *s.session.final_results();
    return att::evaluate_attendance(s.session, registry, rules);
}

json command_json(const eco::Command& c) {
    return {{"ts", c.timestamp}, {"actuator", eco::to_string(c.actuator)}, {"on", c.on}, {"cause", c.cause}};
}

json actuators_json(const eco::ActuatorState& a) {
    return {{"hvac", a.hvac_cooling}, {"lighting", a.lighting}, {"ventilation", a.ventilation}};
}

eco::TraceRow sensor_row(const json& p) {
    return {p.at("ts").get<Millis>(), p.at("temp_c").get<double>(), p.at("humidity_pct").get<double>(),
            p.at("light_raw").get<int>(), p.at("air_raw").get<int>()};
}

/// Calibrated, range-checked reading, or the name of the offending field.
std::variant<eco::Reading, std::string> check_sensor(const eco::TraceRow& row, const PlatformConfig& config) {
    if (row.lux_raw < 0 || row.lux_raw > eco::kAdcMax) return std::string("light_raw");
    if (row.air_raw < 0 || row.air_raw > eco::kAdcMax) return std::string("air_raw");
    try {
        return eco::validate_reading(config.calibration.apply(row));
    } catch (const eco::EcoError& e) {
        return e.detail();
    }
}

}  // namespace

const PlatformState::Session* PlatformState::open_session_in(const std::string& room_id) const {
    for (const auto& [id, s] : sessions) {
        if (s.room_id == room_id && s.session.is_open()) return &s;
    }
    return nullptr;
}

json PlatformState::apply(const EventLogRecord& record, const PlatformConfig& config) {
    if (record.seq != last_seq + 1) {
        throw ServerError(Errc::CorruptRecord, "seq " + std::to_string(record.seq) + " follows " + std::to_string(last_seq));
    }
    const auto& p = record.payload;
    json outcome = json::object();
    try {
        if (record.type == "student_registered") {
            registry.register_student(p.at("student_id"), p.at("display_name"), p.at("tag_uid").get<std::string>(),
                                      p.at("mac").get<std::string>());
        } else if (record.type == "session_opened") {
            att::SessionParams params{p.at("class_id"), p.at("window_start"), p.at("window_end"),
                                      p.at("pairing_window_ms"), p.at("network_id")};
            const std::string id = p.at("session_id");
            sessions.emplace(id, Session{att::ClassSession::open(params, id), p.at("room_id")});
        } else if (record.type == "auth_event") {
            auto& s = sessions.at(p.at("session_id").get<std::string>()).session;
            const att::EventPayload payload{p.at("tag_uid"), p.at("mac"), p.at("network_id")};
            auto ack = s.record_event(registry, event_kind_from(p.at("kind")), p.at("ts"), p.at("node_id"), payload,
                                      config.fraud_rules);
            outcome = {{"event_seq", ack.seq},
                       {"completes", ack.completes},
                       {"reason", att::to_string(ack.reason)},
                       {"student_id", ack.student_id ? json(*ack.student_id) : json(nullptr)},
                       {"logged_failure", ack.logged_failure}};
        } else if (record.type == "session_closed") {
            sessions.at(p.at("session_id").get<std::string>()).session.close(registry, config.fraud_rules);
        } else if (record.type == "document_ingested") {
            auto doc = retrieval::Document::make(p.at("doc_id"), p.at("title"), p.at("text"));
            if (doc.version != p.at("version").get<std::string>()) throw ServerError(Errc::CorruptRecord, "document version");
            documents.insert_or_assign(doc.doc_id, std::move(doc));
        } else if (record.type == "chat_answered") {
            indexed.emplace(p.at("doc_id"), p.at("doc_version"));
            ++chats;
        } else if (record.type == "quiz_generated") {
            indexed.emplace(p.at("doc_id"), p.at("doc_version"));
            ++quizzes;
            quiz_questions += p.at("num_questions").get<std::uint64_t>();
        } else if (record.type == "node_hello") {
            auto type = device::node_type_from_string(p.at("node_type").get<std::string>());
            if (!type) throw ServerError(Errc::CorruptRecord, "node type");
            nodes.insert_or_assign(p.at("node_id").get<std::string>(), Node{*type, p.at("room_id")});
            rooms.try_emplace(p.at("room_id").get<std::string>());
        } else if (record.type == "sensor_report") {
            auto checked = check_sensor(sensor_row(p), config);
            if (!std::holds_alternative<eco::Reading>(checked)) throw ServerError(Errc::CorruptRecord, "sensor reading");
            auto& room = rooms[p.at("room_id").get<std::string>()];
            const auto& reading = std::get<eco::Reading>(checked);
            auto step = eco::control_step(reading, room.controller, config.control);
            room.controller = step.state;
            room.last_reading = reading;
            ++room.reports;
            json commands = json::array();
            for (auto& c : step.commands) {
                commands.push_back(command_json(c));
                room.recent_commands.push_back(std::move(c));
            }
            if (room.recent_commands.size() > kRecentCommands) {
                room.recent_commands.erase(room.recent_commands.begin(),
                                           room.recent_commands.end() - static_cast<std::ptrdiff_t>(kRecentCommands));
            }
            outcome = {{"commands", commands}};
        } else if (record.type == "sensor_rejected") {
            auto& room = rooms[p.at("room_id").get<std::string>()];
            ++room.rejected;
            room.last_warning = "rejected reading at " + std::to_string(p.at("ts").get<Millis>()) + ": " +
                                p.at("field").get<std::string>() + " out of range";
        } else {
            throw ServerError(Errc::CorruptRecord, "unknown record type " + record.type);
        }
    } catch (const ServerError& e) {
        if (e.code() == Errc::CorruptRecord) {
            throw ServerError(Errc::CorruptRecord, "seq " + std::to_string(record.seq) + ": " + e.detail());
        }
        throw;
    } catch (const std::exception& e) {
        throw ServerError(Errc::CorruptRecord, "seq " + std::to_string(record.seq) + ": " + e.what());
    }
    last_seq = record.seq;
    return outcome;
}

json canonical_state(const PlatformState& state, const PlatformConfig& config) {
    json attendance = json::object();
    for (const auto& [id, s] : state.sessions) {
        json results = json::array();
        for (const auto& r : results_of(s, state.registry, config.fraud_rules)) {
            json e = r.evidence ? json{r.evidence->rfid_seq, r.evidence->wifi_seq} : json(nullptr);
            results.push_back({r.student_id, att::to_string(r.status), att::to_string(r.reason), e});
        }
        attendance[id] = {{"room_id", s.room_id},
                          {"open", s.session.is_open()},
                          {"events", s.session.events().size()},
                          {"failures", s.session.failures().size()},
                          {"results", results}};
    }
    json rooms = json::object();
    for (const auto& [id, r] : state.rooms) {
        rooms[id] = {{"actuators", actuators_json(r.controller.actuators)},
                     {"air_demand", r.controller.air_demand},
                     {"humidity_demand", r.controller.humidity_demand},
                     {"reports", r.reports},
                     {"rejected", r.rejected}};
    }
    json keys = json::array();
    for (const auto& [doc, version] : state.indexed) keys.push_back({doc, version});
    json documents = json::object();
    for (const auto& [id, d] : state.documents) documents[id] = d.version;
    json students = json::array();
    for (const auto& s : state.registry.records()) students.push_back({s.student_id, s.tag_uid, s.mac});
    json nodes = json::object();
    for (const auto& [id, n] : state.nodes) nodes[id] = {device::to_string(n.type), n.room_id};
    return {{"attendance", attendance},
            {"rooms", rooms},
            {"cache_keys", keys},
            {"counters", {{"chat", state.chats}, {"quiz", state.quizzes}, {"quiz_questions", state.quiz_questions}}},
            {"documents", documents},
            {"students", students},
            {"nodes", nodes},
            {"last_seq", state.last_seq}};
}

std::string state_digest(const PlatformState& state, const PlatformConfig& config) {
    return sha256_hex(canonical_state(state, config).dump());
}

std::string replay_digest(const PlatformConfig& config, const std::vector<EventLogRecord>& records) {
    PlatformState state;
    for (const auto& r : records) state.apply(r, config);
    return state_digest(state, config);
}

class Platform::Gate final : public assistant::AttendanceGate {
public:
    explicit Gate(const Platform& p) : p_(p) {}
    assistant::GateDecision authorize(std::string_view student_id, std::string_view session_id) const override {
        std::shared_lock lock(p_.mutex_);
        auto it = p_.state_.sessions.find(std::string(session_id));
        if (it == p_.state_.sessions.end()) {
            throw assistant::AssistantError(assistant::Errc::UnknownSession, std::string(session_id));
        }
        return assistant::authorize(it->second.session, p_.state_.registry, student_id, p_.config_.fraud_rules);
    }

private:
    const Platform& p_;
};

class Platform::Documents final : public assistant::DocumentSource {
public:
    explicit Documents(const Platform& p) : p_(p) {}
    std::optional<retrieval::Document> find(std::string_view doc_id) const override {
        std::shared_lock lock(p_.mutex_);
        auto it = p_.state_.documents.find(std::string(doc_id));
        if (it == p_.state_.documents.end()) return std::nullopt;
        return it->second;
    }

private:
    const Platform& p_;
};

Platform::Platform(PlatformConfig config, PlatformOptions options)
    : config_(std::move(config)),
      options_(std::move(options)),
      log_(options_.log_path ? std::make_unique<EventLog>(*options_.log_path, config_.listen.durable)
                             : std::make_unique<EventLog>()),
      cache_(config_.split, std::make_shared<retrieval::HashingEmbedder>(config_.embedding_dimension)) {
    for (const auto& r : log_->records()) state_.apply(r, config_);

    if (options_.generator) {
        chat_generator_ = quiz_generator_ = options_.generator;
    } else if (config_.generator.mode == GeneratorMode::Remote) {
        chat_generator_ = quiz_generator_ = std::make_shared<RemoteGenerator>(config_.generator.remote);
    } else {
        chat_generator_ = std::make_shared<assistant::ExtractiveGenerator>();
    }
    gate_ = std::make_unique<Gate>(*this);
    documents_ = std::make_unique<Documents>(*this);
    assistant_ = std::make_unique<assistant::Assistant>(*gate_, *documents_, cache_, config_.top_k);
}

Platform::~Platform() = default;

Millis Platform::now() const {
    if (options_.clock) return options_.clock();
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

const EventLogRecord& Platform::commit(Category category, std::string type, json payload, json* outcome) {
    const auto& record = log_->append(now(), category, std::move(type), std::move(payload));
    auto result = state_.apply(record, config_);
    if (outcome) *outcome = std::move(result);
    if (options_.on_applied) options_.on_applied(record, state_);
    return record;
}

json Platform::register_student(const std::string& student_id, const std::string& display_name,
                                const std::string& tag_uid, const std::string& mac) {
    std::unique_lock lock(mutex_);
    for (const auto& [id, s] : state_.sessions) {
        if (s.session.is_open()) throw ServerError(Errc::Conflict, "registry is locked while session " + id + " is open");
    }
    auto record = state_.registry.check(student_id, display_name, tag_uid, mac);
    const auto& r = commit(Category::Attendance, "student_registered",
                           {{"student_id", record.student_id},
                            {"display_name", record.display_name},
                            {"tag_uid", record.tag_uid},
                            {"mac", record.mac}},
                           nullptr);
    return {{"seq", r.seq},
            {"student",
             {{"student_id", record.student_id},
              {"display_name", record.display_name},
              {"tag_uid", record.tag_uid},
              {"mac", record.mac}}}};
}

json Platform::open_session(const SessionSpec& spec) {
    std::unique_lock lock(mutex_);
    const auto id = spec.session_id.empty() ? "session-" + std::to_string(state_.sessions.size() + 1) : spec.session_id;
    if (id.empty() || id.find('/') != std::string::npos) bad_request("session_id", "must not contain '/'");
    if (spec.room_id.empty()) bad_request("room_id", "must not be empty");
    if (spec.network_id.empty()) bad_request("network_id", "must not be empty");
    if (state_.sessions.contains(id)) throw ServerError(Errc::Conflict, "session " + id + " already exists");
    if (const auto* open = state_.open_session_in(spec.room_id)) {
        throw ServerError(Errc::Conflict, "room " + spec.room_id + " already has open session " + open->session.id());
    }
    att::SessionParams params{spec.class_id, spec.window_start, spec.window_end,
                              spec.pairing_window_ms.value_or(config_.pairing_window_ms), spec.network_id};
    att::ClassSession::open(params, id);  // validation only
    const auto& r = commit(Category::Attendance, "session_opened",
                           {{"session_id", id},
                            {"class_id", params.class_id},
                            {"room_id", spec.room_id},
                            {"network_id", params.network_id},
                            {"window_start", params.window_start},
                            {"window_end", params.window_end},
                            {"pairing_window_ms", params.pairing_window_ms}},
                           nullptr);
    return {{"seq", r.seq}, {"session_id", id}};
}

json Platform::close_session(const std::string& session_id) {
    std::unique_lock lock(mutex_);
    auto it = state_.sessions.find(session_id);
    if (it == state_.sessions.end()) throw ServerError(Errc::UnknownSession, session_id);
    if (!it->second.session.is_open()) throw ServerError(Errc::Conflict, "session " + session_id + " is already closed");
    const auto& r = commit(Category::Attendance, "session_closed", {{"session_id", session_id}}, nullptr);
    json results = json::array();
    for (const auto& res : *it->second.session.final_results()) results.push_back(result_json(res, state_.registry));
    return {{"seq", r.seq}, {"session_id", session_id}, {"results", results}};
}

json Platform::attendance(const std::string& session_id) const {
    std::shared_lock lock(mutex_);
    auto it = state_.sessions.find(session_id);
    if (it == state_.sessions.end()) throw ServerError(Errc::UnknownSession, session_id);
    const auto& s = it->second;
    json results = json::array();
    for (const auto& r : results_of(s, state_.registry, config_.fraud_rules)) results.push_back(result_json(r, state_.registry));
    json failures = json::array();
    for (const auto& f : s.session.failures()) {
        failures.push_back({{"timestamp", f.timestamp},
                            {"student_id", f.student_id ? json(*f.student_id) : json(nullptr)},
                            {"event_seq", f.event_seq},
                            {"reason", att::to_string(f.reason)},
                            {"retry_count", f.retry_count}});
    }
    const auto& params = s.session.params();
    return {{"session_id", session_id},
            {"class_id", params.class_id},
            {"room_id", s.room_id},
            {"network_id", params.network_id},
            {"window_start", params.window_start},
            {"window_end", params.window_end},
            {"state", s.session.is_open() ? "open" : "closed"},
            {"events", s.session.events().size()},
            {"results", results},
            {"failures", failures},
            {"last_seq", state_.last_seq}};
}

json Platform::ingest_document(const std::string& doc_id, const std::string& title, const std::string& text) {
    auto doc = retrieval::Document::make(doc_id, title, text);
    std::unique_lock lock(mutex_);
    const auto& r = commit(Category::Chat, "document_ingested",
                           {{"doc_id", doc.doc_id}, {"title", doc.title}, {"text", doc.text}, {"version", doc.version}},
                           nullptr);
    return {{"seq", r.seq}, {"doc_id", doc.doc_id}, {"version", doc.version}, {"bytes", doc.text.size()}};
}

json Platform::chat(const assistant::ChatQuery& query) {
    // Gate, retrieval and generation run outside the writer lock.
    auto answer = assistant_->answer_query(query, *chat_generator_);

    std::unique_lock lock(mutex_);
    auto doc = state_.documents.find(query.doc_id);
    if (doc == state_.documents.end()) throw assistant::AssistantError(assistant::Errc::UnknownDocument, query.doc_id);
    const auto& r = commit(Category::Chat, "chat_answered",
                           {{"student_id", query.student_id},
                            {"session_id", query.session_id},
                            {"doc_id", query.doc_id},
                            {"doc_version", doc->second.version},
                            {"question", query.text},
                            {"answer", answer.text},
                            {"citations", answer.citations},
                            {"generator_id", answer.generator_id}},
                           nullptr);
    return {{"seq", r.seq}, {"answer", answer.text}, {"citations", answer.citations}, {"generator_id", answer.generator_id}};
}

json Platform::make_quiz(const std::string& doc_id, const std::string& topic, std::optional<std::size_t> n) {
    auto request = quiz::QuizRequest::make(doc_id, topic, n.value_or(config_.num_questions));
    auto document = documents_->find(doc_id);
    if (!document) throw ServerError(Errc::UnknownDocument, doc_id);
    auto result = quiz::generate_quiz(request, *document, cache_, quiz_generator_.get(), {config_.top_k});
    const auto text = quiz::format_quiz(result.questions);

    std::unique_lock lock(mutex_);
    const auto& r = commit(Category::Quiz, "quiz_generated",
                           {{"doc_id", doc_id},
                            {"doc_version", document->version},
                            {"topic", topic},
                            {"num_questions", request.num_questions},
                            {"generator_id", result.generator_id},
                            {"text", text}},
                           nullptr);
    const auto tags = quiz::difficulty_tags(result.questions);
    json questions = json::array();
    for (std::size_t i = 0; i < result.questions.size(); ++i) {
        const auto& q = result.questions[i];
        questions.push_back({{"stem", q.stem},
                             {"options", q.options},
                             {"correct", q.correct},
                             {"answer", std::string(1, static_cast<char>('A' + q.correct))},
                             {"source_chunk", q.source_chunk ? json(*q.source_chunk) : json(nullptr)},
                             {"difficulty", quiz::to_string(tags[i])}});
    }
    return {{"seq", r.seq},
            {"doc_id", doc_id},
            {"topic", topic},
            {"num_questions", request.num_questions},
            {"generator_id", result.generator_id},
            {"questions", questions},
            {"text", text}};
}

json Platform::environment(const std::string& room_id) const {
    std::shared_lock lock(mutex_);
    auto it = state_.rooms.find(room_id);
    if (it == state_.rooms.end()) throw ServerError(Errc::UnknownRoom, room_id);
    const auto& room = it->second;
    json reading = nullptr;
    if (room.last_reading) {
        const auto& r = *room.last_reading;
        reading = {{"ts", r.timestamp},
                   {"temp_c", r.temp_c},
                   {"humidity_pct", r.humidity_pct},
                   {"lux", r.lux},
                   {"air_ppm", r.air_ppm}};
    }
    json commands = json::array();
    for (const auto& c : room.recent_commands) commands.push_back(command_json(c));
    return {{"room_id", room_id},
            {"reading", reading},
            {"actuators", actuators_json(room.controller.actuators)},
            {"reports", room.reports},
            {"rejected", room.rejected},
            {"warning", room.last_warning.empty() ? json(nullptr) : json(room.last_warning)},
            {"recent_commands", commands},
            {"last_seq", state_.last_seq}};
}

json Platform::students() const {
    std::shared_lock lock(mutex_);
    json out = json::array();
    for (const auto& s : state_.registry.records()) {
        out.push_back({{"student_id", s.student_id}, {"display_name", s.display_name}, {"tag_uid", s.tag_uid}, {"mac", s.mac}});
    }
    return {{"students", out}};
}

json Platform::sessions() const {
    std::shared_lock lock(mutex_);
    json out = json::array();
    for (const auto& [id, s] : state_.sessions) {
        out.push_back({{"session_id", id},
                       {"class_id", s.session.params().class_id},
                       {"room_id", s.room_id},
                       {"state", s.session.is_open() ? "open" : "closed"}});
    }
    return {{"sessions", out}};
}

std::vector<device::WireMessage> Platform::handle_device(DeviceLink& link, const device::WireMessage& msg) {
    using device::MessageType;
    std::vector<device::WireMessage> out;
    if (msg.type == MessageType::Ack) return out;

    auto reject = [&](const std::string& reason, const std::string& detail = {}) {
        json extra{{"ok", false}, {"reason", reason}};
        if (!detail.empty()) extra["detail"] = detail;
        out.push_back(device::make_ack(msg, "server", extra));
        return out;
    };
    auto push = [&](MessageType type, json body) {
        out.push_back({type, "server", link.next_push_seq++, std::move(body)});
    };

    if (msg.seq <= link.last_seq) return reject("StaleSeq", "seq " + std::to_string(msg.seq) + " already seen");
    if (!link.node_id.empty() && msg.node_id != link.node_id) return reject("NodeMismatch", link.node_id);
    link.last_seq = msg.seq;

    std::unique_lock lock(mutex_);
    if (msg.type == MessageType::Hello) {
        const auto type = msg.body.at("node_type").get<std::string>();
        const auto room = msg.body.at("room_id").get<std::string>();
        if (room.empty()) return reject("BadHello", "room_id is empty");
        link.node_id = msg.node_id;
        auto known = state_.nodes.find(msg.node_id);
        const bool same = known != state_.nodes.end() && device::to_string(known->second.type) == type &&
                          known->second.room_id == room;
        if (!same) {
            commit(Category::Device, "node_hello", {{"node_id", msg.node_id}, {"node_type", type}, {"room_id", room}},
                   nullptr);
        }
        out.push_back(device::make_ack(msg, "server"));
        return out;
    }

    auto node = state_.nodes.find(msg.node_id);
    if (node == state_.nodes.end()) return reject("UnknownNode");
    const auto room_id = node->second.room_id;

    switch (msg.type) {
        case MessageType::RfidScan:
        case MessageType::WifiJoin: {
            if (node->second.type != device::NodeType::AttendanceNode) return reject("WrongNodeType");
            const auto* session = state_.open_session_in(room_id);
            if (!session) return reject("NoOpenSession", room_id);
            const bool scan = msg.type == MessageType::RfidScan;
            json outcome;
            commit(Category::Attendance, "auth_event",
                   {{"session_id", session->session.id()},
                    {"kind", scan ? "RfidScan" : "WifiPresence"},
                    {"ts", msg.body.at("ts")},
                    {"node_id", msg.node_id},
                    {"tag_uid", scan ? msg.body.at("tag_uid").get<std::string>() : ""},
                    {"mac", scan ? "" : msg.body.at("mac").get<std::string>()},
                    {"network_id", scan ? "" : msg.body.at("network_id").get<std::string>()}},
                   &outcome);
            const bool completes = outcome.at("completes").get<bool>();
            const auto reason = outcome.at("reason").get<std::string>();
            push(MessageType::DisplayText, {{"lines", device::display_for_ack(completes, reason).lines}});
            json extra{{"completes", completes}, {"reason", reason}};
            if (!outcome.at("student_id").is_null()) extra["student_id"] = outcome.at("student_id");
            out.push_back(device::make_ack(msg, "server", extra));
            return out;
        }
        case MessageType::SensorReport: {
            if (node->second.type != device::NodeType::EcoNode) return reject("WrongNodeType");
            const auto row = sensor_row(msg.body);
            auto checked = check_sensor(row, config_);
            json payload{{"node_id", msg.node_id},
                         {"room_id", room_id},
                         {"ts", row.timestamp},
                         {"temp_c", row.temp_c},
                         {"humidity_pct", row.humidity_pct},
                         {"light_raw", row.lux_raw},
                         {"air_raw", row.air_raw}};
            if (auto* field = std::get_if<std::string>(&checked)) {
                payload["field"] = *field;
                commit(Category::Environment, "sensor_rejected", payload, nullptr);
                return reject("RangeViolation", *field);
            }
            json outcome;
            commit(Category::Environment, "sensor_report", payload, &outcome);
            for (const auto& c : outcome.at("commands")) {
                push(MessageType::ActuatorCmd, {{"actuator", c.at("actuator")}, {"on", c.at("on")}, {"cause", c.at("cause")}});
            }
            out.push_back(device::make_ack(msg, "server"));
            return out;
        }
        default: return reject("UnexpectedType", device::to_string(msg.type));
    }
}

std::string Platform::digest() const {
    std::shared_lock lock(mutex_);
    return state_digest(state_, config_);
}

json Platform::canonical() const {
    std::shared_lock lock(mutex_);
    return canonical_state(state_, config_);
}

std::uint64_t Platform::last_seq() const {
    std::shared_lock lock(mutex_);
    return state_.last_seq;
}

std::vector<EventLogRecord> Platform::records() const {
    std::shared_lock lock(mutex_);
    return log_->records();
}

bool Platform::recovered_torn_tail() const { return log_->recovered_torn_tail(); }

std::uint64_t Platform::retrieval_runs() const noexcept { return assistant_->pipeline_runs(); }

}  // namespace smartclass::server
