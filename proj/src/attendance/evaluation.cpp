#include "smartclass/attendance/evaluation.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>

namespace smartclass::attendance {

namespace {

bool in_window(const SessionParams& p, Millis t) { return p.window_start <= t && t <= p.window_end; }

Millis gap(Millis a, Millis b) { return a > b ? a - b : b - a; }

// Well-formed events grouped by credential, built once per evaluation.
struct EventIndex {
    std::unordered_map<std::string, std::vector<const AuthEvent*>> rfid_by_tag;
    std::unordered_map<std::string, std::vector<const AuthEvent*>> wifi_by_mac;

    explicit EventIndex(std::span<const AuthEvent> events) {
        for (const auto& e : events) {
            if (e.malformed) continue;
            if (e.kind == EventKind::RfidScan) {
                rfid_by_tag[e.tag_uid].push_back(&e);
            } else {
                wifi_by_mac[e.mac].push_back(&e);
            }
        }
    }

    std::span<const AuthEvent* const> rfids(const std::string& tag) const {
        auto it = rfid_by_tag.find(tag);
        return it == rfid_by_tag.end() ? std::span<const AuthEvent* const>{} : it->second;
    }
    std::span<const AuthEvent* const> wifis(const std::string& mac) const {
        auto it = wifi_by_mac.find(mac);
        return it == wifi_by_mac.end() ? std::span<const AuthEvent* const>{} : it->second;
    }
};

AttendanceResult evaluate_indexed(const SessionParams& p, const EventIndex& index, const StudentRecord& student) {
    AttendanceResult result{student.student_id, Status::Absent, std::nullopt, Reason::NoRfid};
    auto rfids = index.rfids(student.tag_uid);
    auto wifis = index.wifis(student.mac);

    using Key = std::tuple<Millis, Millis, std::uint64_t, std::uint64_t>;
    std::optional<Key> best;
    for (const auto* r : rfids) {
        if (!in_window(p, r->timestamp)) continue;
        for (const auto* w : wifis) {
            if (w->network_id != p.network_id || !in_window(p, w->timestamp)) continue;
            if (gap(r->timestamp, w->timestamp) > p.pairing_window_ms) continue;
            Key key{r->timestamp, w->timestamp, r->seq, w->seq};
            if (!best || key < *best) best = key;
        }
    }
    if (best) {
        result.status = Status::Present;
        result.reason = Reason::Ok;
        result.evidence = Evidence{std::get<2>(*best), std::get<3>(*best)};
        return result;
    }

    // Absence reason: the first missing ingredient in this order.
    auto any_in_window = [&](auto&& events, auto&& extra) {
        return std::any_of(events.begin(), events.end(),
                           [&](const AuthEvent* e) { return in_window(p, e->timestamp) && extra(*e); });
    };
    auto on_network = [&](const AuthEvent& e) { return e.network_id == p.network_id; };
    auto always = [](const AuthEvent&) { return true; };

    if (rfids.empty()) {
        result.reason = Reason::NoRfid;
    } else if (!any_in_window(rfids, always)) {
        result.reason = Reason::OutsideWindow;
    } else if (wifis.empty()) {
        result.reason = Reason::NoWifi;
    } else if (std::none_of(wifis.begin(), wifis.end(), [&](const AuthEvent* e) { return on_network(*e); })) {
        result.reason = Reason::WrongNetwork;
    } else if (!any_in_window(wifis, on_network)) {
        result.reason = Reason::OutsideWindow;
    } else {
        result.reason = Reason::PairingTooFar;
    }
    return result;
}

// Wifi events that count as "present on the session network": in window,
// expected network, MAC owned by a registered student.
std::vector<const AuthEvent*> network_presences(const SessionView& s, const Registry& registry) {
    std::vector<const AuthEvent*> out;
    for (const auto& e : s.events) {
        if (e.malformed || e.kind != EventKind::WifiPresence) continue;
        if (e.network_id != s.params.network_id || !in_window(s.params, e.timestamp)) continue;
        if (!registry.find_by_mac(e.mac)) continue;
        out.push_back(&e);
    }
    std::sort(out.begin(), out.end(), [](const AuthEvent* a, const AuthEvent* b) {
        return std::tie(a->timestamp, a->seq) < std::tie(b->timestamp, b->seq);
    });
    return out;
}

void student_flags(const SessionView& s, const EventIndex& index, const std::vector<const AuthEvent*>& presences,
                   const StudentRecord& student, const FraudRules& rules, std::vector<FraudFlag>& out) {
    auto rfids = index.rfids(student.tag_uid);
    const auto pairing = s.params.pairing_window_ms;

    if (rules.proxy_scan) {
        for (const auto* scan : rfids) {
            if (!in_window(s.params, scan->timestamp)) continue;
            auto lo = std::lower_bound(presences.begin(), presences.end(), scan->timestamp - pairing,
                                       [](const AuthEvent* e, Millis t) { return e->timestamp < t; });
            const AuthEvent* first_other = nullptr;
            bool own_present = false;
            for (auto it = lo; it != presences.end() && (*it)->timestamp <= scan->timestamp + pairing; ++it) {
                if ((*it)->mac == student.mac) {
                    own_present = true;
                    break;
                }
                if (!first_other) first_other = *it;
            }
            if (!own_present && first_other) {
                out.push_back({FraudKind::ProxyScan, student.student_id, scan->seq, first_other->seq,
                               "tag scanned while only " + first_other->mac + " was on the network"});
            }
        }
    }

    if (rules.duplicate_tag) {
        std::vector<const AuthEvent*> sorted(rfids.begin(), rfids.end());
        std::sort(sorted.begin(), sorted.end(), [](const AuthEvent* a, const AuthEvent* b) {
            return std::tie(a->timestamp, a->seq) < std::tie(b->timestamp, b->seq);
        });
        for (std::size_t i = 1; i < sorted.size(); ++i) {
            if (sorted[i]->timestamp - sorted[i - 1]->timestamp <= pairing) {
                out.push_back({FraudKind::DuplicateTagUse, student.student_id, sorted[i]->seq, sorted[i - 1]->seq,
                               "tag scanned again within the pairing window"});
            }
        }
    }
}

// Rule (c): a single wifi event used as evidence for two students.
void shared_mac_flags(const SessionView& s, const EventIndex& index, const Registry& registry,
                      std::vector<FraudFlag>& out) {
    std::map<std::uint64_t, std::vector<const StudentRecord*>> users;
    for (const auto& student : registry.records()) {
        auto r = evaluate_indexed(s.params, index, student);
        if (r.evidence) users[r.evidence->wifi_seq].push_back(&student);
    }
    for (const auto& [wifi_seq, students] : users) {
        if (students.size() < 2) continue;
        for (const auto* st : students) {
            out.push_back({FraudKind::SharedMac, st->student_id, wifi_seq, std::nullopt,
                           "wifi event used as evidence for more than one student"});
        }
    }
}

std::vector<FraudFlag> detect_indexed(const SessionView& s, const EventIndex& index, const Registry& registry,
                                      const FraudRules& rules) {
    std::vector<FraudFlag> flags;
    if (rules.proxy_scan || rules.duplicate_tag) {
        auto presences = network_presences(s, registry);
        for (const auto& student : registry.records()) student_flags(s, index, presences, student, rules, flags);
    }
    if (rules.shared_mac) shared_mac_flags(s, index, registry, flags);
    return flags;
}

Reason flag_reason(bool duplicate) { return duplicate ? Reason::DuplicateTagUse : Reason::TagMacMismatch; }

}  // namespace

AttendanceResult evaluate_student(const SessionView& session, const StudentRecord& student) {
    return evaluate_indexed(session.params, EventIndex(session.events), student);
}

AttendanceResult evaluate_for(const SessionView& session, const Registry& registry, const StudentRecord& student,
                              const FraudRules& rules) {
    EventIndex index(session.events);
    auto result = evaluate_indexed(session.params, index, student);

    std::vector<FraudFlag> flags;
    if (rules.proxy_scan || rules.duplicate_tag) {
        student_flags(session, index, network_presences(session, registry), student, rules, flags);
    }
    if (rules.shared_mac && result.evidence) {
        // Evidence can only be shared if another student owns the same MAC.
        const auto& wifi = *std::find_if(session.events.begin(), session.events.end(), [&](const AuthEvent& e) {
            return e.seq == result.evidence->wifi_seq;
        });
        const auto* owner = registry.find_by_mac(wifi.mac);
        if (owner && owner->student_id != student.student_id) {
            flags.push_back({FraudKind::SharedMac, student.student_id, wifi.seq, std::nullopt, ""});
        }
    }
    if (!flags.empty()) {
        const bool duplicate = std::any_of(flags.begin(), flags.end(),
                                           [](const FraudFlag& f) { return f.kind == FraudKind::DuplicateTagUse; });
        result.status = Status::Flagged;
        result.reason = flag_reason(duplicate);
        result.evidence.reset();
    }
    return result;
}

std::vector<FraudFlag> detect_fraud(const SessionView& session, const Registry& registry, const FraudRules& rules) {
    return detect_indexed(session, EventIndex(session.events), registry, rules);
}

std::vector<AttendanceResult> evaluate_attendance(const SessionView& session, const Registry& registry,
                                                  const FraudRules& rules) {
    EventIndex index(session.events);
    auto flags = detect_indexed(session, index, registry, rules);

    // student -> has a DuplicateTagUse flag (takes precedence as the reason)
    std::map<std::string, bool> flagged;
    for (const auto& f : flags) {
        flagged[f.student_id] = flagged[f.student_id] || f.kind == FraudKind::DuplicateTagUse;
    }

    std::vector<AttendanceResult> results;
    results.reserve(registry.size());
    for (const auto& student : registry.records()) {
        auto r = evaluate_indexed(session.params, index, student);
        if (auto it = flagged.find(student.student_id); it != flagged.end()) {
            r.status = Status::Flagged;
            r.reason = flag_reason(it->second);
            r.evidence.reset();
        }
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace smartclass::attendance
