#include "smartclass/attendance/types.hpp"

#include <array>

namespace smartclass::attendance {

const char* to_string(Errc e) noexcept {
    switch (e) {
        case Errc::InvalidId: return "InvalidId";
        case Errc::InvalidTag: return "InvalidTag";
        case Errc::InvalidMac: return "InvalidMac";
        case Errc::DuplicateTag: return "DuplicateTag";
        case Errc::DuplicateMac: return "DuplicateMac";
        case Errc::DuplicateStudentId: return "DuplicateStudentId";
        case Errc::InvalidWindow: return "InvalidWindow";
        case Errc::SessionClosed: return "SessionClosed";
        case Errc::MalformedPayload: return "MalformedPayload";
        case Errc::BadRegistryFile: return "BadRegistryFile";
    }
    return "?";
}

const char* to_string(EventKind k) noexcept {
    return k == EventKind::RfidScan ? "RfidScan" : "WifiPresence";
}

namespace {
constexpr std::array<std::pair<Reason, const char*>, 9> kReasonNames{{
    {Reason::Ok, "Ok"},
    {Reason::NoRfid, "NoRfid"},
    {Reason::NoWifi, "NoWifi"},
    {Reason::OutsideWindow, "OutsideWindow"},
    {Reason::PairingTooFar, "PairingTooFar"},
    {Reason::WrongNetwork, "WrongNetwork"},
    {Reason::TagMacMismatch, "TagMacMismatch"},
    {Reason::DuplicateTagUse, "DuplicateTagUse"},
    {Reason::Malformed, "Malformed"},
}};

int hex_value(char c) noexcept {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

// Hex digits with optional ':'/'-' separators between bytes, lowercased.
std::optional<std::string> hex_digits(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == ':' || c == '-') continue;
        if (hex_value(c) < 0) return std::nullopt;
        out.push_back(static_cast<char>(c >= 'A' && c <= 'F' ? c - 'A' + 'a' : c));
    }
    return out;
}
}  // namespace

const char* to_string(Reason r) noexcept {
    for (const auto& [value, name] : kReasonNames) {
        if (value == r) return name;
    }
    return "?";
}

std::optional<Reason> reason_from_string(std::string_view s) noexcept {
    for (const auto& [value, name] : kReasonNames) {
        if (s == name) return value;
    }
    return std::nullopt;
}

const char* to_string(Status s) noexcept {
    switch (s) {
        case Status::Present: return "Present";
        case Status::Absent: return "Absent";
        case Status::Flagged: return "Flagged";
    }
    return "?";
}

const char* to_string(FraudKind k) noexcept {
    switch (k) {
        case FraudKind::ProxyScan: return "ProxyScan";
        case FraudKind::DuplicateTagUse: return "DuplicateTagUse";
        case FraudKind::SharedMac: return "SharedMac";
    }
    return "?";
}

std::optional<std::string> canonical_tag(std::string_view tag_uid) {
    if (tag_uid.starts_with("0x") || tag_uid.starts_with("0X")) tag_uid.remove_prefix(2);
    auto digits = hex_digits(tag_uid);
    if (!digits || digits->size() % 2 != 0) return std::nullopt;
    const auto bytes = digits->size() / 2;
    if (bytes < 4 || bytes > 10) return std::nullopt;
    return digits;
}

std::optional<std::string> canonical_mac(std::string_view mac) {
    // Either 12 bare digits or six 2-digit groups with a consistent separator.
    if (mac.size() == 17) {
        const char sep = mac[2];
        if (sep != ':' && sep != '-') return std::nullopt;
        for (std::size_t i = 2; i < 17; i += 3) {
            if (mac[i] != sep) return std::nullopt;
        }
    } else if (mac.size() != 12) {
        return std::nullopt;
    }
    auto digits = hex_digits(mac);
    if (!digits || digits->size() != 12) return std::nullopt;
    std::string out;
    for (std::size_t i = 0; i < 12; i += 2) {
        if (!out.empty()) out.push_back(':');
        out.append(*digits, i, 2);
    }
    return out;
}

}  // namespace smartclass::attendance
