#include "smartclass/attendance/session.hpp"

#include <atomic>

#include "smartclass/attendance/evaluation.hpp"

namespace smartclass::attendance {

namespace {
std::atomic<std::uint64_t> g_session_counter{0};
}

ClassSession ClassSession::open(SessionParams params, std::string session_id) {
    if (params.window_start >= params.window_end) {
        throw AttendanceError(Errc::InvalidWindow, "window_start must be before window_end");
    }
    if (params.pairing_window_ms <= 0) {
        throw AttendanceError(Errc::InvalidWindow, "pairing_window_ms must be positive");
    }
    ClassSession s;
    s.id_ = session_id.empty() ? "session-" + std::to_string(++g_session_counter) : std::move(session_id);
    s.params_ = std::move(params);
    return s;
}

void ClassSession::log_failure(Millis timestamp, std::optional<std::string> student_id, std::uint64_t seq,
                               Reason reason, const std::string& key) {
    auto& count = failure_counts_[key];
    // retry_count is the number of earlier failures under the same key
    failures_.push_back({timestamp, std::move(student_id), seq, reason, count});
    ++count;
}

Ack ClassSession::record_event(const Registry& registry, EventKind kind, Millis timestamp, std::string node_id,
                               const EventPayload& payload, const FraudRules& rules) {
    if (!is_open()) throw AttendanceError(Errc::SessionClosed, id_);

    AuthEvent event;
    event.seq = next_seq_++;
    event.kind = kind;
    event.timestamp = timestamp;
    event.node_id = std::move(node_id);

    Ack ack;
    ack.seq = event.seq;
    const StudentRecord* student = nullptr;
    std::string failure_key;

    if (kind == EventKind::RfidScan) {
        auto tag = canonical_tag(payload.tag_uid);
        event.tag_uid = tag.value_or(payload.tag_uid);
        event.malformed = !tag || timestamp < 0;
        failure_key = "tag:" + event.tag_uid;
        if (!event.malformed) student = registry.find_by_tag(event.tag_uid);
    } else {
        auto mac = canonical_mac(payload.mac);
        event.mac = mac.value_or(payload.mac);
        event.network_id = payload.network_id;
        event.malformed = !mac || timestamp < 0;
        failure_key = "mac:" + event.mac;
        if (!event.malformed) student = registry.find_by_mac(event.mac);
    }
    events_.push_back(event);

    if (event.malformed) {
        ack.reason = Reason::Malformed;
        log_failure(timestamp, std::nullopt, event.seq, ack.reason, failure_key);
        ack.logged_failure = true;
        return ack;
    }
    if (!student) {
        ack.reason = Reason::TagMacMismatch;
        log_failure(timestamp, std::nullopt, event.seq, ack.reason, failure_key);
        ack.logged_failure = true;
        return ack;
    }

    ack.student_id = student->student_id;
    const bool wrong_network = kind == EventKind::WifiPresence && event.network_id != params_.network_id;
    const bool outside = timestamp < params_.window_start || timestamp > params_.window_end;
    if (wrong_network || outside) {
        ack.reason = wrong_network ? Reason::WrongNetwork : Reason::OutsideWindow;
        log_failure(timestamp, student->student_id, event.seq, ack.reason, student->student_id);
        ack.logged_failure = true;
        return ack;
    }

    auto result = evaluate_for(view_of(*this), registry, *student, rules);
    ack.completes = result.status == Status::Present;
    ack.reason = result.reason;
    return ack;
}

bool ClassSession::close(const Registry& registry, const FraudRules& rules) {
    if (!is_open()) return false;
    final_ = evaluate_attendance(view_of(*this), registry, rules);
    state_ = SessionState::Closed;
    return true;
}

}  // namespace smartclass::attendance
