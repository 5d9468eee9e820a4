#pragma once

#include <span>
#include <vector>

#include "smartclass/attendance/registry.hpp"
#include "smartclass/attendance/session.hpp"

namespace smartclass::attendance {

/// Pure view of what evaluation needs from a session; lets callers evaluate
/// an arbitrary event list (a prefix, a permutation) without a session.
struct SessionView {
    const SessionParams& params;
    std::span<const AuthEvent> events;
};

inline SessionView view_of(const ClassSession& s) { return {s.params(), s.events()}; }

std::vector<FraudFlag> detect_fraud(const SessionView& session, const Registry& registry,
                                    const FraudRules& rules = {});

/// One result per registered student, in registry order.
///
/// A student is Present when some RfidScan of their tag at t_r and some
/// WifiPresence of their MAC on the session network at t_w both fall inside
/// [window_start, window_end] with |t_r - t_w| <= pairing_window_ms. The
/// evidence is the lexicographically smallest (t_r, t_w, rfid seq, wifi seq).
/// Students with any fraud flag under `rules` are reported Flagged.
std::vector<AttendanceResult> evaluate_attendance(const SessionView& session, const Registry& registry,
                                                  const FraudRules& rules = {});

/// Evaluation for a single student, without fraud rules applied.
AttendanceResult evaluate_student(const SessionView& session, const StudentRecord& student);

/// Same result evaluate_attendance would report for `student`, computed
/// without evaluating the rest of the class.
AttendanceResult evaluate_for(const SessionView& session, const Registry& registry, const StudentRecord& student,
                              const FraudRules& rules = {});

inline std::vector<FraudFlag> detect_fraud(const ClassSession& s, const Registry& r, const FraudRules& rules = {}) {
    return detect_fraud(view_of(s), r, rules);
}
inline std::vector<AttendanceResult> evaluate_attendance(const ClassSession& s, const Registry& r,
                                                         const FraudRules& rules = {}) {
    return evaluate_attendance(view_of(s), r, rules);
}

}  // namespace smartclass::attendance
