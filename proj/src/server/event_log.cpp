#include "smartclass/server/event_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "smartclass/common/digest.hpp"

namespace smartclass::server {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<Category, const char*>, 5> kCategories{{
    {Category::Attendance, "Attendance"},
    {Category::Environment, "Environment"},
    {Category::Chat, "Chat"},
    {Category::Quiz, "Quiz"},
    {Category::Device, "Device"},
}};

std::string checksum(std::string_view seq, std::string_view body) {
    std::string input(seq);
    input += ' ';
    input += body;
    return sha256_hex(input).substr(0, 16);
}

[[noreturn]] void corrupt(std::uint64_t seq, const std::string& what) {
    throw ServerError(Errc::CorruptRecord, "seq " + std::to_string(seq) + ": " + what);
}

EventLogRecord parse_line(std::string_view line, std::uint64_t expected) {
    const auto s1 = line.find(' ');
    const auto s2 = s1 == std::string_view::npos ? s1 : line.find(' ', s1 + 1);
    if (s2 == std::string_view::npos) corrupt(expected, "malformed line");
    const auto seq_text = line.substr(0, s1);
    const auto sum = line.substr(s1 + 1, s2 - s1 - 1);
    const auto body = line.substr(s2 + 1);
    if (checksum(seq_text, body) != sum) corrupt(expected, "checksum mismatch");

    std::uint64_t seq = 0;
    auto [ptr, ec] = std::from_chars(seq_text.data(), seq_text.data() + seq_text.size(), seq);
    if (ec != std::errc{} || ptr != seq_text.data() + seq_text.size() || seq != expected) {
        corrupt(expected, "sequence number out of order");
    }
    try {
        auto j = json::parse(body);
        EventLogRecord r;
        r.seq = seq;
        r.timestamp = j.at("ts").get<Millis>();
        auto category = category_from_string(j.at("category").get<std::string>());
        if (!category) corrupt(expected, "unknown category");
        r.category = *category;
        r.type = j.at("type").get<std::string>();
        r.payload = j.at("payload");
        return r;
    } catch (const json::exception& e) {
        corrupt(expected, e.what());
    }
}

}  // namespace

const char* to_string(Category c) noexcept {
    for (const auto& [cat, name] : kCategories) {
        if (cat == c) return name;
    }
    return "?";
}

std::optional<Category> category_from_string(std::string_view s) noexcept {
    for (const auto& [cat, name] : kCategories) {
        if (s == name) return cat;
    }
    return std::nullopt;
}

std::string encode_record(const EventLogRecord& record) {
    const json j{{"ts", record.timestamp}, {"category", to_string(record.category)}, {"type", record.type},
                 {"payload", record.payload}};
    const auto body = j.dump();
    const auto seq = std::to_string(record.seq);
    return seq + " " + checksum(seq, body) + " " + body + "\n";
}

LogContents read_log(std::string_view bytes) {
    LogContents out;
    if (bytes.empty()) return out;
    const auto header_end = bytes.find('\n');
    if (header_end == std::string_view::npos) {
        // A header cut short while the log was being created.
        if (kLogHeader.substr(0, bytes.size()) == bytes) {
            out.torn_tail = true;
            return out;
        }
        corrupt(0, "bad header");
    }
    if (bytes.substr(0, header_end) != kLogHeader) corrupt(0, "bad header");
    std::size_t pos = header_end + 1;
    out.valid_bytes = pos;
    while (pos < bytes.size()) {
        const auto nl = bytes.find('\n', pos);
        if (nl == std::string_view::npos) {
            out.torn_tail = true;
            break;
        }
        out.records.push_back(parse_line(bytes.substr(pos, nl - pos), out.records.size() + 1));
        pos = nl + 1;
        out.valid_bytes = pos;
    }
    return out;
}

LogContents read_log_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ServerError(Errc::StorageFailure, "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return read_log(ss.str());
}

EventLog::EventLog(const std::filesystem::path& path, bool durable) : path_(path), durable_(durable) {
    LogContents contents;
    if (std::filesystem::exists(path)) contents = read_log_file(path);
    records_ = std::move(contents.records);
    torn_tail_ = contents.torn_tail;

    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT, 0644);
    if (fd_ < 0) throw ServerError(Errc::StorageFailure, "cannot open " + path.string() + ": " + std::strerror(errno));
    if (::ftruncate(fd_, static_cast<off_t>(contents.valid_bytes)) != 0 ||
        ::lseek(fd_, static_cast<off_t>(contents.valid_bytes), SEEK_SET) < 0) {
        throw ServerError(Errc::StorageFailure, "cannot truncate " + path.string());
    }
    if (contents.valid_bytes == 0) {
        const std::string header = std::string(kLogHeader) + "\n";
        if (::write(fd_, header.data(), header.size()) != static_cast<ssize_t>(header.size())) {
            throw ServerError(Errc::StorageFailure, "cannot write header to " + path.string());
        }
        if (durable_) ::fsync(fd_);
    }
}

EventLog::~EventLog() {
    if (fd_ >= 0) ::close(fd_);
}

const EventLogRecord& EventLog::append(Millis timestamp, Category category, std::string type, json payload) {
    EventLogRecord record{last_seq() + 1, timestamp, category, std::move(type), std::move(payload)};
    if (fd_ >= 0) {
        const auto line = encode_record(record);
        const auto start = ::lseek(fd_, 0, SEEK_CUR);
        std::size_t written = 0;
        while (written < line.size()) {
            const auto n = ::write(fd_, line.data() + written, line.size() - written);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) {
                // Leave no partial record behind.
                if (start >= 0 && ::ftruncate(fd_, start) == 0) ::lseek(fd_, start, SEEK_SET);
                throw ServerError(Errc::StorageFailure, std::string("write: ") + std::strerror(errno));
            }
            written += static_cast<std::size_t>(n);
        }
        if (durable_ && ::fsync(fd_) != 0) {
            throw ServerError(Errc::StorageFailure, std::string("fsync: ") + std::strerror(errno));
        }
    }
    records_.push_back(std::move(record));
    return records_.back();
}

}  // namespace smartclass::server
