#pragma once

#include <istream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "smartclass/attendance/types.hpp"

namespace smartclass::attendance {

/// Students and their two credentials. Iteration order is insertion order.
class Registry {
public:
    /// Validates and canonicalizes the credentials, then inserts.
    /// Throws AttendanceError (InvalidId, InvalidTag, InvalidMac,
    /// DuplicateStudentId, DuplicateTag, DuplicateMac).
    const StudentRecord& register_student(std::string student_id, std::string display_name,
                                          std::string_view tag_uid, std::string_view mac);

    /// Same checks as register_student without inserting.
    StudentRecord check(std::string student_id, std::string display_name, std::string_view tag_uid,
                        std::string_view mac) const;

    const StudentRecord* find(std::string_view student_id) const;
    const StudentRecord* find_by_tag(std::string_view canonical_tag) const;
    const StudentRecord* find_by_mac(std::string_view canonical_mac) const;

    const std::vector<StudentRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

private:
    std::vector<StudentRecord> records_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::unordered_map<std::string, std::size_t> by_tag_;
    std::unordered_map<std::string, std::size_t> by_mac_;
};

/// Bootstrap file: one student per line, comma-separated
/// `student_id,display_name,tag_uid,mac`. Blank lines and lines starting
/// with '#' are skipped. Errors carry the 1-based line number.
Registry load_registry(std::istream& in);

}  // namespace smartclass::attendance
