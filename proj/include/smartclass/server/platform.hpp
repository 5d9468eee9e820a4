#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "smartclass/assistant/assistant.hpp"
#include "smartclass/attendance/evaluation.hpp"
#include "smartclass/device/node.hpp"
#include "smartclass/ecosmart/ecosmart.hpp"
#include "smartclass/quiz/quiz.hpp"
#include "smartclass/server/config.hpp"
#include "smartclass/server/event_log.hpp"

namespace smartclass::server {

struct Request {
    std::string method;
    std::string path;
    std::string body;
    std::string admin_token;  ///< as presented by the caller
};

struct Response {
    int status = 200;
    nlohmann::json body = nlohmann::json::object();
};

struct SessionSpec {
    std::string session_id;  ///< empty: assigned "session-<n>"
    std::string class_id;
    std::string room_id;
    std::string network_id;
    Millis window_start = 0;
    Millis window_end = 0;
    std::optional<Millis> pairing_window_ms;  ///< config default when empty
};

struct RoomState {
    ecosmart::ControllerState controller;
    std::optional<ecosmart::Reading> last_reading;
    std::uint64_t reports = 0;
    std::uint64_t rejected = 0;
    std::string last_warning;
    std::vector<ecosmart::Command> recent_commands;  ///< newest last, bounded
};

/// Everything the event log determines. Built only by folding records.
struct PlatformState {
    struct Session {
        attendance::ClassSession session;
        std::string room_id;
    };
    struct Node {
        device::NodeType type;
        std::string room_id;
    };

    attendance::Registry registry;
    std::map<std::string, Session> sessions;
    std::map<std::string, retrieval::Document> documents;
    std::set<std::pair<std::string, std::string>> indexed;  ///< (doc_id, version) used by chat or quiz
    std::map<std::string, RoomState> rooms;
    std::map<std::string, Node> nodes;
    std::uint64_t chats = 0;
    std::uint64_t quizzes = 0;
    std::uint64_t quiz_questions = 0;
    std::uint64_t last_seq = 0;

    /// Folds one record and returns what the command produced (ack data,
    /// actuator commands). Throws CorruptRecord for records that cannot apply.
    nlohmann::json apply(const EventLogRecord& record, const PlatformConfig& config);

    /// The open session for a room, if any.
    const Session* open_session_in(const std::string& room_id) const;
};

/// Canonical JSON of the state: attendance results per session, actuator
/// states per room, cache keys, counters, documents, students and nodes.
nlohmann::json canonical_state(const PlatformState& state, const PlatformConfig& config);
/// Hex SHA-256 of canonical_state(...).dump().
std::string state_digest(const PlatformState& state, const PlatformConfig& config);

/// Digest of the state obtained by folding `records` from empty.
std::string replay_digest(const PlatformConfig& config, const std::vector<EventLogRecord>& records);

struct PlatformOptions {
    std::optional<std::filesystem::path> log_path;  ///< empty: memory-only log
    std::function<Millis()> clock;                  ///< record timestamps; system clock by default
    /// Called after each append+apply, under the writer lock.
    std::function<void(const EventLogRecord&, const PlatformState&)> on_applied;
    /// Overrides the generator chosen by the config (chat and quiz).
    std::shared_ptr<const Generator> generator;
};

/// Per-connection protocol state for one device link.
struct DeviceLink {
    std::string node_id;
    std::uint64_t last_seq = 0;
    std::uint64_t next_push_seq = 1;
};

/// The platform: one ordered writer over the event log, read endpoints over
/// consistent snapshots. Every state change is check -> append -> apply.
class Platform {
public:
    /// Replays an existing log first when options.log_path names one.
    explicit Platform(PlatformConfig config, PlatformOptions options = {});
    ~Platform();

    Response handle_api(const Request& request);

    /// One wire message from a device link; returns pushes, then the Ack.
    std::vector<device::WireMessage> handle_device(DeviceLink& link, const device::WireMessage& message);

    // Typed operations behind the API. They throw the module errors that
    // handle_api maps to status codes.
    nlohmann::json register_student(const std::string& student_id, const std::string& display_name,
                                    const std::string& tag_uid, const std::string& mac);
    nlohmann::json open_session(const SessionSpec& spec);
    nlohmann::json close_session(const std::string& session_id);
    nlohmann::json attendance(const std::string& session_id) const;
    nlohmann::json ingest_document(const std::string& doc_id, const std::string& title, const std::string& text);
    nlohmann::json chat(const assistant::ChatQuery& query);
    nlohmann::json make_quiz(const std::string& doc_id, const std::string& topic, std::optional<std::size_t> n);
    nlohmann::json environment(const std::string& room_id) const;
    nlohmann::json students() const;
    nlohmann::json sessions() const;

    std::string digest() const;
    nlohmann::json canonical() const;
    std::uint64_t last_seq() const;
    std::vector<EventLogRecord> records() const;
    bool recovered_torn_tail() const;

    /// Queries that passed the attendance gate into retrieval.
    std::uint64_t retrieval_runs() const noexcept;
    std::uint64_t index_builds() const noexcept { return cache_.builds(); }
    const PlatformConfig& config() const noexcept { return config_; }

private:
    class Gate;
    class Documents;

    const EventLogRecord& commit(Category category, std::string type, nlohmann::json payload, nlohmann::json* outcome);
    Millis now() const;

    PlatformConfig config_;
    PlatformOptions options_;
    mutable std::shared_mutex mutex_;
    std::unique_ptr<EventLog> log_;
    PlatformState state_;
    retrieval::IndexCache cache_;
    std::shared_ptr<const Generator> chat_generator_;
    std::shared_ptr<const Generator> quiz_generator_;  ///< null: cloze stub
    std::unique_ptr<Gate> gate_;
    std::unique_ptr<Documents> documents_;
    std::unique_ptr<assistant::Assistant> assistant_;
    std::mutex injected_mutex_;
    std::map<std::string, DeviceLink> injected_links_;
};

}  // namespace smartclass::server
