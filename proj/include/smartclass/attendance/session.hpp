#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smartclass/attendance/registry.hpp"
#include "smartclass/attendance/types.hpp"

namespace smartclass::attendance {

inline constexpr Millis kDefaultPairingWindowMs = 300'000;

struct SessionParams {
    std::string class_id;
    Millis window_start = 0;
    Millis window_end = 0;
    Millis pairing_window_ms = kDefaultPairingWindowMs;
    std::string network_id;
};

enum class SessionState { Open, Closed };

/// Raw payload of an incoming authentication event, before validation.
struct EventPayload {
    std::string tag_uid;     ///< RfidScan
    std::string mac;         ///< WifiPresence
    std::string network_id;  ///< WifiPresence
};

/// Immediate feedback for the device that produced an event.
struct Ack {
    std::uint64_t seq = 0;
    bool completes = false;
    Reason reason = Reason::NoRfid;
    std::optional<std::string> student_id;
    bool logged_failure = false;  ///< a FailureLogEntry was appended for this event

    bool operator==(const Ack&) const = default;
};

/// A time-windowed class session. All mutation goes through record_event,
/// whose seq counter defines the total order of events.
class ClassSession {
public:
    /// Throws AttendanceError(InvalidWindow) unless window_start < window_end
    /// and pairing_window_ms > 0. An empty id draws "session-N" from a
    /// process-wide counter.
    static ClassSession open(SessionParams params, std::string session_id = {});

    const std::string& id() const noexcept { return id_; }
    const SessionParams& params() const noexcept { return params_; }
    SessionState state() const noexcept { return state_; }
    bool is_open() const noexcept { return state_ == SessionState::Open; }
    const std::vector<AuthEvent>& events() const noexcept { return events_; }
    const std::vector<FailureLogEntry>& failures() const noexcept { return failures_; }

    /// Appends the event with the next seq and reports whether the event's
    /// student is now Present. Malformed or unmatchable payloads are still
    /// appended, add one FailureLogEntry and come back with a failure reason.
    /// Throws AttendanceError(SessionClosed) once closed.
    Ack record_event(const Registry& registry, EventKind kind, Millis timestamp, std::string node_id,
                     const EventPayload& payload, const FraudRules& rules = {});

    /// Freezes the results. Returns false if the session was already closed.
    bool close(const Registry& registry, const FraudRules& rules = {});

    /// Results captured at close time, if closed.
    const std::optional<std::vector<AttendanceResult>>& final_results() const noexcept { return final_; }

private:
    ClassSession() = default;
    void log_failure(Millis timestamp, std::optional<std::string> student_id, std::uint64_t seq, Reason reason,
                     const std::string& key);

    std::string id_;
    SessionParams params_;
    SessionState state_ = SessionState::Open;
    std::vector<AuthEvent> events_;
    std::vector<FailureLogEntry> failures_;
    std::map<std::string, std::uint32_t> failure_counts_;
    std::uint64_t next_seq_ = 1;
    std::optional<std::vector<AttendanceResult>> final_;
};

}  // namespace smartclass::attendance
