#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smartclass/device/node.hpp"
#include "smartclass/server/platform.hpp"

namespace smartclass::server {

/// A platform scenario file, one directive per line ('#' comments allowed):
///
///   config <path>                           optional; if present, the first directive
///   registry <path>                         bootstrap CSV of students
///   student <id> <tag> <mac> [name...]
///   document <doc_id> <path> [title...]
///   session <id> <class> <room> <network> <window_start> <window_end>
///   node <node_id> attendance|eco <room>
///   at <node_id> <ts> <action> [args...]    queues one device action
///   run                                     plays queued actions in virtual time
///   chat <student> <session> <doc> <question...>
///   quiz <doc> <n> <topic...>
///   close <session>
///   expect status <session> <student> Present|Absent|Flagged
///   expect actuator <room> hvac|lighting|ventilation on|off
///   expect display <node_id> <text...>
///   expect toggles <room> <actuator> <count>
///
/// Relative paths resolve against the script's directory. Queued actions
/// still pending at the end are run implicitly.
struct ScenarioOptions {
    std::filesystem::path base_dir = ".";
    std::optional<std::filesystem::path> log_path;  ///< memory-only when empty
    bool over_tcp = false;                          ///< nodes talk to a real DeviceListener
    PlatformOptions platform;                       ///< log_path here is ignored
};

struct ChatOutcome {
    int status = 0;
    nlohmann::json body;
};

struct ScenarioReport {
    std::vector<std::string> output;  ///< one line per directive outcome
    std::vector<std::string> failed_expectations;
    std::map<std::string, device::Transcript> transcripts;
    std::vector<ChatOutcome> chats;
    std::vector<ChatOutcome> quizzes;
    nlohmann::json attendance;  ///< session id -> attendance sheet
    std::string live_digest;
    std::string replay_digest;
    std::vector<EventLogRecord> records;

    bool ok() const noexcept { return failed_expectations.empty() && live_digest == replay_digest; }
};

/// Throws ServerError(ScenarioError) naming the line for malformed
/// directives and for setup directives the platform refuses. Chat and quiz
/// outcomes, including refusals such as a 403, are recorded instead.
ScenarioReport run_platform_scenario(std::istream& script, const ScenarioOptions& options = {});
ScenarioReport run_platform_scenario_file(const std::filesystem::path& path, ScenarioOptions options = {});

/// Human-readable attendance table for one session sheet.
std::string format_attendance_table(const nlohmann::json& sheet);

}  // namespace smartclass::server
