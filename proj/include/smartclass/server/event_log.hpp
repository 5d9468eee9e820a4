#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smartclass/server/config.hpp"

namespace smartclass::server {

using Millis = std::int64_t;

enum class Category { Attendance, Environment, Chat, Quiz, Device };
const char* to_string(Category c) noexcept;
std::optional<Category> category_from_string(std::string_view s) noexcept;

struct EventLogRecord {
    std::uint64_t seq = 0;
    Millis timestamp = 0;
    Category category = Category::Attendance;
    std::string type;
    nlohmann::json payload = nlohmann::json::object();

    bool operator==(const EventLogRecord&) const = default;
};

/// First line of every log file.
inline constexpr std::string_view kLogHeader = "#smartclass-eventlog v1";

/// One line: "<seq> <checksum> <json>\n". The checksum is the first 16 hex
/// digits of SHA-256 over "<seq> <json>".
std::string encode_record(const EventLogRecord& record);

struct LogContents {
    std::vector<EventLogRecord> records;  ///< seqs 1..n
    std::size_t valid_bytes = 0;          ///< header plus complete records
    bool torn_tail = false;               ///< an unterminated final line was dropped
};

/// Parses a whole log. An unterminated last line is a torn write and is
/// dropped; any complete line that fails its checksum, parse or sequence
/// check throws ServerError(CorruptRecord) with the expected seq (0 for the
/// header). An empty input is an empty log.
LogContents read_log(std::string_view bytes);
LogContents read_log_file(const std::filesystem::path& path);

/// Append-only record store, optionally backed by a file. Not synchronized;
/// the platform serializes writers.
class EventLog {
public:
    /// Memory only.
    EventLog() = default;
    /// Loads an existing file (cutting off a torn tail) or creates it.
    /// Throws CorruptRecord or StorageFailure.
    EventLog(const std::filesystem::path& path, bool durable);
    ~EventLog();
    EventLog(const EventLog&) = delete;
    EventLog& operator=(const EventLog&) = delete;

    /// Assigns seq = last + 1 and persists the record (fsync when durable)
    /// before returning. Throws StorageFailure and then leaves the log
    /// unchanged.
    const EventLogRecord& append(Millis timestamp, Category category, std::string type, nlohmann::json payload);

    const std::vector<EventLogRecord>& records() const noexcept { return records_; }
    std::uint64_t last_seq() const noexcept { return records_.empty() ? 0 : records_.back().seq; }
    const std::optional<std::filesystem::path>& path() const noexcept { return path_; }
    bool recovered_torn_tail() const noexcept { return torn_tail_; }

private:
    std::vector<EventLogRecord> records_;
    std::optional<std::filesystem::path> path_;
    int fd_ = -1;
    bool durable_ = false;
    bool torn_tail_ = false;
};

}  // namespace smartclass::server
