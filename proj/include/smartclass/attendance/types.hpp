#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "smartclass/common/error.hpp"

namespace smartclass::attendance {

using Millis = std::int64_t;

enum class Errc {
    InvalidId,
    InvalidTag,
    InvalidMac,
    DuplicateTag,
    DuplicateMac,
    DuplicateStudentId,
    InvalidWindow,
    SessionClosed,
    MalformedPayload,
    BadRegistryFile,
};
const char* to_string(Errc e) noexcept;
using AttendanceError = Error<Errc>;

/// Canonical lowercase hex of a 4-10 byte tag UID, or nullopt if the input
/// is not an even-length hex string of that size. Accepts an optional "0x"
/// prefix and ':' or '-' byte separators.
std::optional<std::string> canonical_tag(std::string_view tag_uid);

/// Canonical "aa:bb:cc:dd:ee:ff" form of a 6-byte MAC written with ':' or
/// '-' separators, or as 12 bare hex digits.
std::optional<std::string> canonical_mac(std::string_view mac);

struct StudentRecord {
    std::string student_id;
    std::string display_name;
    std::string tag_uid;  ///< canonical form
    std::string mac;      ///< canonical form

    bool operator==(const StudentRecord&) const = default;
};

enum class EventKind { RfidScan, WifiPresence };
const char* to_string(EventKind k) noexcept;

/// Outcome codes. `Malformed` only appears in acks and the failure log,
/// never in an AttendanceResult.
enum class Reason {
    Ok,
    NoRfid,
    NoWifi,
    OutsideWindow,
    PairingTooFar,
    WrongNetwork,
    TagMacMismatch,
    DuplicateTagUse,
    Malformed,
};
const char* to_string(Reason r) noexcept;
std::optional<Reason> reason_from_string(std::string_view s) noexcept;

enum class Status { Present, Absent, Flagged };
const char* to_string(Status s) noexcept;

struct AuthEvent {
    std::uint64_t seq = 0;
    EventKind kind = EventKind::RfidScan;
    Millis timestamp = 0;
    std::string node_id;
    std::string tag_uid;     ///< RfidScan only; canonical when well-formed
    std::string mac;         ///< WifiPresence only; canonical when well-formed
    std::string network_id;  ///< WifiPresence only
    bool malformed = false;  ///< payload failed syntax checks; never matches

    bool operator==(const AuthEvent&) const = default;
};

struct Evidence {
    std::uint64_t rfid_seq = 0;
    std::uint64_t wifi_seq = 0;
    bool operator==(const Evidence&) const = default;
};

struct AttendanceResult {
    std::string student_id;
    Status status = Status::Absent;
    std::optional<Evidence> evidence;
    Reason reason = Reason::NoRfid;

    bool operator==(const AttendanceResult&) const = default;
};

struct FailureLogEntry {
    Millis timestamp = 0;
    std::optional<std::string> student_id;
    std::uint64_t event_seq = 0;
    Reason reason = Reason::Malformed;
    std::uint32_t retry_count = 0;

    bool operator==(const FailureLogEntry&) const = default;
};

enum class FraudKind { ProxyScan, DuplicateTagUse, SharedMac };
const char* to_string(FraudKind k) noexcept;

struct FraudFlag {
    FraudKind kind;
    std::string student_id;
    std::uint64_t event_seq;          ///< scan (or wifi event for SharedMac) that triggered the flag
    std::optional<std::uint64_t> other_seq;
    std::string detail;

    bool operator==(const FraudFlag&) const = default;
};

/// Each fraud rule can be switched off independently.
struct FraudRules {
    bool proxy_scan = true;
    bool duplicate_tag = true;
    bool shared_mac = true;

    static FraudRules none() { return {false, false, false}; }
    bool operator==(const FraudRules&) const = default;
};

}  // namespace smartclass::attendance
