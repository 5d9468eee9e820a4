#include "smartclass/attendance/registry.hpp"

#include <string>

#include "smartclass/common/text.hpp"

namespace smartclass::attendance {

StudentRecord Registry::check(std::string student_id, std::string display_name, std::string_view tag_uid,
                              std::string_view mac) const {
    if (student_id.empty()) throw AttendanceError(Errc::InvalidId, "student_id is empty");
    auto tag = canonical_tag(tag_uid);
    if (!tag) throw AttendanceError(Errc::InvalidTag, std::string(tag_uid));
    auto canon_mac = canonical_mac(mac);
    if (!canon_mac) throw AttendanceError(Errc::InvalidMac, std::string(mac));

    if (by_id_.contains(student_id)) throw AttendanceError(Errc::DuplicateStudentId, student_id);
    if (by_tag_.contains(*tag)) throw AttendanceError(Errc::DuplicateTag, *tag);
    if (by_mac_.contains(*canon_mac)) throw AttendanceError(Errc::DuplicateMac, *canon_mac);
    return {std::move(student_id), std::move(display_name), std::move(*tag), std::move(*canon_mac)};
}

const StudentRecord& Registry::register_student(std::string student_id, std::string display_name,
                                                std::string_view tag_uid, std::string_view mac) {
    auto record = check(std::move(student_id), std::move(display_name), tag_uid, mac);
    const auto index = records_.size();
    by_id_.emplace(record.student_id, index);
    by_tag_.emplace(record.tag_uid, index);
    by_mac_.emplace(record.mac, index);
    records_.push_back(std::move(record));
    return records_.back();
}

namespace {
template <typename Map>
const StudentRecord* lookup(const Map& map, const std::vector<StudentRecord>& records, std::string_view key) {
    auto it = map.find(std::string(key));
    return it == map.end() ? nullptr : &records[it->second];
}
}  // namespace

const StudentRecord* Registry::find(std::string_view student_id) const { return lookup(by_id_, records_, student_id); }

const StudentRecord* Registry::find_by_tag(std::string_view canonical_tag) const {
    return lookup(by_tag_, records_, canonical_tag);
}

const StudentRecord* Registry::find_by_mac(std::string_view canonical_mac) const {
    return lookup(by_mac_, records_, canonical_mac);
}

Registry load_registry(std::istream& in) {
    Registry registry;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto body = text::trim(line);
        if (body.empty() || body.front() == '#') continue;

        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            auto comma = body.find(',', start);
            fields.emplace_back(text::trim(body.substr(start, comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 4) {
            throw AttendanceError(Errc::BadRegistryFile,
                                  "line " + std::to_string(line_no) + ": expected 4 fields, got " +
                                      std::to_string(fields.size()));
        }
        try {
            registry.register_student(fields[0], fields[1], fields[2], fields[3]);
        } catch (const AttendanceError& e) {
            throw AttendanceError(e.code(), "line " + std::to_string(line_no) + ": " + e.detail());
        }
    }
    return registry;
}

}  // namespace smartclass::attendance
