#include <doctest.h>

#include <fstream>
#include <sstream>

#include "smartclass/server/platform.hpp"
#include "temp_dir.hpp"

using namespace smartclass;
using namespace smartclass::server;
using nlohmann::json;
using device::MessageType;
using device::WireMessage;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << bytes;
}

std::vector<std::string> violations_of(const json& j) {
    try {
        parse_config(j);
    } catch (const ConfigInvalid& e) {
        return e.violations();
    }
    return {};
}

bool any_contains(const std::vector<std::string>& v, const std::string& needle) {
    for (const auto& s : v) {
        if (s.find(needle) != std::string::npos) return true;
    }
    return false;
}

PlatformOptions fixed_clock(PlatformOptions o = {}) {
    o.clock = [] { return Millis{1'700'000'000'000}; };
    return o;
}

Response call(Platform& p, std::string method, std::string path, json body = nullptr, std::string token = {}) {
    return p.handle_api({std::move(method), std::move(path), body.is_null() ? "" : body.dump(), std::move(token)});
}

const char* kCourse =
    "Edge nodes read sensors and publish telemetry to the broker. "
    "The attendance node pairs an RFID scan with a WiFi join. "
    "The eco node switches the HVAC relay when the room gets warm.";

/// Two students, one room with an open session, one attendance node and one eco node.
void seed(Platform& p) {
    REQUIRE(call(p, "POST", "/students", {{"student_id", "ada"}, {"display_name", "Ada"}, {"tag_uid", "04a3b2c1"}, {"mac", "aa:bb:cc:dd:ee:01"}}).status == 201);
    REQUIRE(call(p, "POST", "/students", {{"student_id", "bob"}, {"display_name", "Bob"}, {"tag_uid", "04a3b2c2"}, {"mac", "aa:bb:cc:dd:ee:02"}}).status == 201);
    REQUIRE(call(p, "POST", "/documents", {{"doc_id", "iot"}, {"title", "IoT"}, {"text", kCourse}}).status == 201);
    REQUIRE(call(p, "POST", "/sessions",
                 {{"session_id", "s1"}, {"class_id", "iot-101"}, {"room_id", "r1"}, {"network_id", "campus"},
                  {"window_start", 0}, {"window_end", 3'600'000}})
                .status == 201);
}

WireMessage msg(MessageType type, std::string node, std::uint64_t seq, json body) {
    return {type, std::move(node), seq, std::move(body)};
}

const WireMessage& ack_of(const std::vector<WireMessage>& out) {
    REQUIRE_FALSE(out.empty());
    REQUIRE(out.back().type == MessageType::Ack);
    return out.back();
}

/// Hello plus a full dual-factor check-in for ada through the device path.
void check_in_ada(Platform& p) {
    DeviceLink door;
    ack_of(p.handle_device(door, msg(MessageType::Hello, "door-1", 1, {{"node_type", "attendance"}, {"room_id", "r1"}})));
    ack_of(p.handle_device(door, msg(MessageType::RfidScan, "door-1", 2, {{"ts", 1000}, {"tag_uid", "04a3b2c1"}})));
    auto out = p.handle_device(door, msg(MessageType::WifiJoin, "door-1", 3, {{"ts", 2000}, {"mac", "aa:bb:cc:dd:ee:01"}, {"network_id", "campus"}}));
    REQUIRE(ack_of(out).body["completes"] == true);
}

}  // namespace

TEST_CASE("config defaults and round trip") {
    const auto c = parse_config(json::object());
    const PlatformConfig d;
    CHECK(c.pairing_window_ms == d.pairing_window_ms);
    CHECK(c.top_k == d.top_k);
    CHECK(c.num_questions == 5);
    CHECK(c.control.hvac_band == d.control.hvac_band);
    CHECK(c.control.humidity_vent_band == d.control.humidity_vent_band);
    CHECK(c.split == d.split);
    CHECK(c.generator.mode == GeneratorMode::Stub);
    CHECK(c.listen.http_port == 8080);
    CHECK(c.listen.device_port == 9100);

    const auto again = parse_config(to_json(c));
    CHECK(to_json(again) == to_json(c));
}

TEST_CASE("config violations are collected") {
    SUBCASE("inverted band") {
        auto v = violations_of({{"ecosmart", {{"hvac", {{"on", 24.0}, {"off", 26.0}}}}}});
        CHECK(any_contains(v, "ecosmart.hvac"));
    }
    SUBCASE("unknown key") {
        auto v = violations_of({{"foo", 1}, {"retrieval", {{"chunk_sise", 200}}}});
        CHECK(any_contains(v, "chunk_sise"));
        CHECK(any_contains(v, "foo"));
    }
    SUBCASE("several at once") {
        auto v = violations_of({{"retrieval", {{"top_k", "four"}}}, {"server", {{"http_port", -1}}}, {"extra", 1}});
        CHECK(v.size() >= 3);
        CHECK(any_contains(v, "top_k"));
        CHECK(any_contains(v, "http_port"));
        CHECK(any_contains(v, "extra"));
    }
    SUBCASE("remote generator needs an endpoint") {
        auto v = violations_of({{"generator", {{"mode", "remote"}}}});
        CHECK(any_contains(v, "endpoint"));
    }
}

TEST_CASE("load_config reads a file") {
    TempDir dir;
    spit(dir / "c.json", R"({"quiz": {"num_questions": 3}})");
    CHECK(load_config(dir / "c.json").num_questions == 3);
    spit(dir / "bad.json", "{ not json");
    CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigInvalid);
    CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigInvalid);
}

TEST_CASE("event log append and reload") {
    TempDir dir;
    const auto path = dir / "events.log";
    {
        EventLog log(path, true);
        CHECK(log.last_seq() == 0);
        CHECK(log.append(10, Category::Attendance, "a", {{"x", 1}}).seq == 1);
        CHECK(log.append(11, Category::Chat, "b", {{"y", "z"}}).seq == 2);
    }
    EventLog reopened(path, false);
    REQUIRE(reopened.records().size() == 2);
    CHECK(reopened.records()[1].type == "b");
    CHECK(reopened.records()[1].payload["y"] == "z");
    CHECK(reopened.records()[0].category == Category::Attendance);
    CHECK_FALSE(reopened.recovered_torn_tail());
    CHECK(reopened.append(12, Category::Quiz, "c", {}).seq == 3);
}

TEST_CASE("event log detects corruption and recovers a torn tail") {
    TempDir dir;
    const auto path = dir / "events.log";
    {
        EventLog log(path, false);
        for (int i = 0; i < 5; ++i) log.append(i, Category::Device, "t", {{"i", i}});
    }
    const auto bytes = slurp(path);

    SUBCASE("every flipped payload byte is caught") {
        const auto body_start = bytes.find('\n') + 1;
        for (std::size_t i = body_start; i < bytes.size(); ++i) {
            if (bytes[i] == '\n') continue;
            auto mutated = bytes;
            mutated[i] = static_cast<char>(mutated[i] ^ 0x01);
            bool threw = false;
            try {
                read_log(mutated);
            } catch (const ServerError& e) {
                threw = e.code() == Errc::CorruptRecord;
            }
            CHECK_MESSAGE(threw, "offset " << i);
        }
    }
    SUBCASE("a torn tail is cut off") {
        for (std::size_t cut = 1; cut < 30; ++cut) {
            spit(path, bytes.substr(0, bytes.size() - cut));
            EventLog log(path, false);
            CHECK(log.records().size() == 4);
            CHECK(log.recovered_torn_tail());
            CHECK(log.append(99, Category::Device, "t", {}).seq == 5);
            auto reread = read_log(slurp(path));
            CHECK(reread.records.size() == 5);
            CHECK_FALSE(reread.torn_tail);
        }
    }
    SUBCASE("a bad header is corrupt at seq 0") {
        auto mutated = bytes;
        mutated[1] = 'X';
        CHECK_THROWS_WITH_AS(read_log(mutated), doctest::Contains("seq 0"), ServerError);
    }
    SUBCASE("a missing line breaks the sequence") {
        const auto first = bytes.find('\n') + 1;
        const auto second = bytes.find('\n', first) + 1;
        auto mutated = bytes.substr(0, first) + bytes.substr(second);
        CHECK_THROWS_AS(read_log(mutated), ServerError);
    }
}

TEST_CASE("API status codes") {
    PlatformConfig config;
    config.listen.admin_token = "secret";
    Platform p(config, fixed_clock());
    auto admin = [&](std::string method, std::string path, json body = nullptr) {
        return call(p, std::move(method), std::move(path), std::move(body), "secret");
    };

    CHECK(call(p, "GET", "/health").status == 200);
    CHECK(call(p, "GET", "/nowhere").status == 404);
    CHECK(call(p, "DELETE", "/students").status == 405);

    const json ada{{"student_id", "ada"}, {"display_name", "Ada"}, {"tag_uid", "04a3b2c1"}, {"mac", "aa:bb:cc:dd:ee:01"}};
    CHECK(call(p, "POST", "/students", ada).status == 401);
    CHECK(admin("POST", "/students", ada).status == 201);
    CHECK(admin("POST", "/students", ada).status == 409);
    auto bad_tag = admin("POST", "/students", {{"student_id", "x"}, {"tag_uid", "zz"}, {"mac", "aa:bb:cc:dd:ee:09"}});
    CHECK(bad_tag.status == 400);
    auto missing = admin("POST", "/students", {{"student_id", "x"}, {"mac", "aa:bb:cc:dd:ee:09"}});
    CHECK(missing.status == 400);
    CHECK(missing.body["field"] == "tag_uid");
    CHECK(p.handle_api({"POST", "/students", "{nope", "secret"}).status == 400);

    CHECK(admin("POST", "/documents", {{"doc_id", "iot"}, {"title", "IoT"}, {"text", kCourse}}).status == 201);
    CHECK(admin("POST", "/documents", {{"doc_id", "iot"}, {"text", ""}}).status == 400);

    const json session{{"session_id", "s1"}, {"class_id", "c"}, {"room_id", "r1"}, {"network_id", "campus"},
                       {"window_start", 0}, {"window_end", 1000}};
    CHECK(admin("POST", "/sessions", session).status == 201);
    CHECK(admin("POST", "/sessions", session).status == 409);
    auto same_room = session;
    same_room["session_id"] = "s2";
    CHECK(admin("POST", "/sessions", same_room).status == 409);
    auto bad_window = session;
    bad_window["session_id"] = "s3";
    bad_window["room_id"] = "r2";
    bad_window["window_end"] = 0;
    CHECK(admin("POST", "/sessions", bad_window).status == 400);
    CHECK(admin("POST", "/students", {{"student_id", "bob"}, {"tag_uid", "04a3b2c2"}, {"mac", "aa:bb:cc:dd:ee:02"}}).status == 409);

    CHECK(call(p, "GET", "/sessions/s1/attendance").status == 200);
    CHECK(call(p, "GET", "/sessions/nope/attendance").status == 404);

    const json chat{{"student_id", "ada"}, {"session_id", "s1"}, {"doc_id", "iot"}, {"question", "What does the eco node do?"}};
    auto denied = call(p, "POST", "/chat", chat);
    CHECK(denied.status == 403);
    CHECK(denied.body["status"] == "Absent");
    CHECK(denied.body["reason"] == "NoRfid");
    auto unknown_student = chat;
    unknown_student["student_id"] = "zed";
    CHECK(call(p, "POST", "/chat", unknown_student).status == 404);
    auto unknown_session = chat;
    unknown_session["session_id"] = "s9";
    CHECK(call(p, "POST", "/chat", unknown_session).status == 404);
    auto empty_question = chat;
    empty_question["question"] = "";
    CHECK(call(p, "POST", "/chat", empty_question).status == 400);

    CHECK(call(p, "POST", "/quiz", {{"doc_id", "iot"}, {"topic", "sensors"}, {"num_questions", 2}}).status == 200);
    auto zero = call(p, "POST", "/quiz", {{"doc_id", "iot"}, {"topic", "sensors"}, {"num_questions", 0}});
    CHECK(zero.status == 400);
    CHECK(zero.body["field"] == "num_questions");
    CHECK(call(p, "POST", "/quiz", {{"doc_id", "nope"}, {"topic", "sensors"}}).status == 404);
    CHECK(call(p, "POST", "/quiz", {{"doc_id", "iot"}, {"topic", "xylophone"}}).status == 422);

    CHECK(call(p, "GET", "/environment/r1").status == 404);
    CHECK(call(p, "POST", "/nodes/events", json{{"type", "Bogus"}}).status == 400);

    CHECK(call(p, "POST", "/sessions/s1/close").status == 401);
    auto closed = admin("POST", "/sessions/s1/close");
    CHECK(closed.status == 200);
    CHECK(closed.body["results"].size() == 1);
    CHECK(admin("POST", "/sessions/s1/close").status == 409);
    CHECK(admin("POST", "/sessions/nope/close").status == 404);
    CHECK(call(p, "GET", "/state/digest").body["digest"] == p.digest());
}

TEST_CASE("device path: check-in, pushes and acks") {
    Platform p(PlatformConfig{}, fixed_clock());
    seed(p);
    DeviceLink door;

    auto early = p.handle_device(door, msg(MessageType::RfidScan, "door-1", 1, {{"ts", 10}, {"tag_uid", "04a3b2c1"}}));
    CHECK(ack_of(early).body["ok"] == false);
    CHECK(ack_of(early).body["reason"] == "UnknownNode");

    auto hello = p.handle_device(door, msg(MessageType::Hello, "door-1", 2, {{"node_type", "attendance"}, {"room_id", "r1"}}));
    CHECK(ack_of(hello).seq == 2);

    auto scan = p.handle_device(door, msg(MessageType::RfidScan, "door-1", 3, {{"ts", 1000}, {"tag_uid", "04a3b2c1"}}));
    REQUIRE(scan.size() == 2);
    CHECK(scan[0].type == MessageType::DisplayText);
    CHECK(scan[0].body["lines"] == json{"Card read", "Join class WiFi"});
    CHECK(ack_of(scan).body["completes"] == false);
    CHECK(ack_of(scan).body["reason"] == "NoWifi");

    auto stale = p.handle_device(door, msg(MessageType::RfidScan, "door-1", 3, {{"ts", 1001}, {"tag_uid", "04a3b2c1"}}));
    CHECK(ack_of(stale).body["reason"] == "StaleSeq");

    auto join = p.handle_device(door, msg(MessageType::WifiJoin, "door-1", 4, {{"ts", 2000}, {"mac", "aa:bb:cc:dd:ee:01"}, {"network_id", "campus"}}));
    CHECK(join[0].body["lines"] == json{"Attendance Taken!"});
    CHECK(ack_of(join).body["completes"] == true);
    CHECK(ack_of(join).body["student_id"] == "ada");

    auto sheet = p.attendance("s1");
    CHECK(sheet["results"][0]["status"] == "Present");
    CHECK(sheet["results"][0]["evidence"]["rfid_seq"] == 1);
    CHECK(sheet["results"][1]["status"] == "Absent");

    auto malformed = p.handle_device(door, msg(MessageType::RfidScan, "door-1", 5, {{"ts", 2100}, {"tag_uid", "zz"}}));
    CHECK(ack_of(malformed).body["reason"] == "Malformed");
    CHECK(p.attendance("s1")["failures"].size() == 1);

    auto wrong = p.handle_device(door, msg(MessageType::SensorReport, "door-1", 6,
                                           {{"ts", 1}, {"temp_c", 20.0}, {"humidity_pct", 40.0}, {"light_raw", 3000}, {"air_raw", 100}}));
    CHECK(ack_of(wrong).body["reason"] == "WrongNodeType");

    auto other = p.handle_device(door, msg(MessageType::RfidScan, "door-2", 7, {{"ts", 1}, {"tag_uid", "04a3b2c2"}}));
    CHECK(ack_of(other).body["reason"] == "NodeMismatch");

    CHECK(p.handle_device(door, msg(MessageType::Ack, "door-1", 1, {{"ok", true}})).empty());
}

TEST_CASE("device path: eco node drives actuators and rejects bad readings") {
    Platform p(PlatformConfig{}, fixed_clock());
    DeviceLink eco;
    ack_of(p.handle_device(eco, msg(MessageType::Hello, "eco-1", 1, {{"node_type", "eco"}, {"room_id", "r1"}})));
    auto report = [&](std::uint64_t seq, double temp, int light) {
        return p.handle_device(eco, msg(MessageType::SensorReport, "eco-1", seq,
                                        {{"ts", seq * 1000}, {"temp_c", temp}, {"humidity_pct", 40.0}, {"light_raw", light}, {"air_raw", 100}}));
    };

    auto hot = report(2, 27.0, 3000);
    REQUIRE(hot.size() == 2);
    CHECK(hot[0].type == MessageType::ActuatorCmd);
    CHECK(hot[0].body["actuator"] == "hvac");
    CHECK(hot[0].body["on"] == true);
    CHECK(ack_of(hot).body["ok"] == true);

    CHECK(report(3, 25.0, 3000).size() == 1);  // inside the deadband: no command
    auto cool = report(4, 23.5, 3000);
    REQUIRE(cool.size() == 2);
    CHECK(cool[0].body["on"] == false);

    auto out_of_range = report(5, 120.0, 3000);
    REQUIRE(out_of_range.size() == 1);
    CHECK(ack_of(out_of_range).body["reason"] == "RangeViolation");
    CHECK(ack_of(out_of_range).body["detail"] == "temp_c");
    auto adc = report(6, 22.0, 5000);
    CHECK(ack_of(adc).body["detail"] == "light_raw");

    auto env = p.environment("r1");
    CHECK(env["reports"] == 3);
    CHECK(env["rejected"] == 2);
    CHECK(env["actuators"]["hvac"] == false);
    CHECK(env["reading"]["temp_c"] == 23.5);
    CHECK(env["warning"].get<std::string>().find("light_raw") != std::string::npos);
    CHECK(env["recent_commands"].size() == 2);

    DeviceLink stray;
    auto scan = p.handle_device(stray, msg(MessageType::RfidScan, "eco-1", 1, {{"ts", 1}, {"tag_uid", "04a3b2c1"}}));
    CHECK(ack_of(scan).body["reason"] == "WrongNodeType");
}

TEST_CASE("attendance events need an open session in the node's room") {
    Platform p(PlatformConfig{}, fixed_clock());
    seed(p);
    DeviceLink door;
    ack_of(p.handle_device(door, msg(MessageType::Hello, "door-9", 1, {{"node_type", "attendance"}, {"room_id", "r9"}})));
    auto out = p.handle_device(door, msg(MessageType::RfidScan, "door-9", 2, {{"ts", 10}, {"tag_uid", "04a3b2c1"}}));
    CHECK(ack_of(out).body["reason"] == "NoOpenSession");
    CHECK(p.attendance("s1")["events"] == 0);
}

TEST_CASE("injected device events go through the HTTP surface") {
    Platform p(PlatformConfig{}, fixed_clock());
    seed(p);
    auto post = [&](json m) { return call(p, "POST", "/nodes/events", std::move(m)); };
    auto r = post({{"type", "Hello"}, {"node_id", "door-1"}, {"seq", 1}, {"body", {{"node_type", "attendance"}, {"room_id", "r1"}}}});
    REQUIRE(r.status == 200);
    CHECK(r.body["replies"].size() == 1);
    r = post({{"type", "RfidScan"}, {"node_id", "door-1"}, {"seq", 2}, {"body", {{"ts", 5}, {"tag_uid", "04a3b2c2"}}}});
    REQUIRE(r.body["replies"].size() == 2);
    CHECK(r.body["replies"][0]["type"] == "DisplayText");
    CHECK(r.body["replies"][1]["body"]["reason"] == "NoWifi");
}

TEST_CASE("chat after check-in, and the gate keeps denied queries out of retrieval") {
    Platform p(PlatformConfig{}, fixed_clock());
    seed(p);
    const json question{{"student_id", "ada"}, {"session_id", "s1"}, {"doc_id", "iot"}, {"question", "When does the eco node switch the HVAC relay?"}};

    for (int i = 0; i < 5; ++i) CHECK(call(p, "POST", "/chat", question).status == 403);
    CHECK(p.retrieval_runs() == 0);
    CHECK(p.index_builds() == 0);

    check_in_ada(p);
    auto ok = call(p, "POST", "/chat", question);
    REQUIRE(ok.status == 200);
    CHECK(ok.body["generator_id"] == "extractive-stub");
    CHECK(ok.body["answer"].get<std::string>().find("HVAC relay") != std::string::npos);
    CHECK(ok.body["citations"] == json{0});  // chunk ids; the document is one chunk
    CHECK(p.retrieval_runs() == 1);
    CHECK(p.index_builds() == 1);

    auto bob = question;
    bob["student_id"] = "bob";
    CHECK(call(p, "POST", "/chat", bob).status == 403);
    CHECK(p.retrieval_runs() == 1);
    CHECK(p.canonical()["counters"]["chat"] == 1);
}

TEST_CASE("replay reproduces the live state") {
    TempDir dir;
    const auto path = dir / "events.log";
    PlatformOptions options = fixed_clock();
    options.log_path = path;
    std::vector<std::string> live_digests;
    options.on_applied = [&](const EventLogRecord&, const PlatformState& s) {
        live_digests.push_back(state_digest(s, PlatformConfig{}));
    };
    std::string digest;
    std::vector<EventLogRecord> records;
    {
        Platform p(PlatformConfig{}, options);
        seed(p);
        check_in_ada(p);
        DeviceLink eco;
        ack_of(p.handle_device(eco, msg(MessageType::Hello, "eco-1", 1, {{"node_type", "eco"}, {"room_id", "r1"}})));
        p.handle_device(eco, msg(MessageType::SensorReport, "eco-1", 2, {{"ts", 1}, {"temp_c", 30.0}, {"humidity_pct", 40.0}, {"light_raw", 100}, {"air_raw", 3000}}));
        p.handle_device(eco, msg(MessageType::SensorReport, "eco-1", 3, {{"ts", 2}, {"temp_c", 30.0}, {"humidity_pct", 400.0}, {"light_raw", 100}, {"air_raw", 3000}}));
        p.chat({"ada", "s1", "iot", "What does the attendance node pair?", std::nullopt});
        p.make_quiz("iot", "sensors", 2);
        p.close_session("s1");
        digest = p.digest();
        records = p.records();
    }
    REQUIRE(live_digests.size() == records.size());
    CHECK(replay_digest(PlatformConfig{}, records) == digest);
    for (std::size_t i = 0; i < records.size(); ++i) {
        std::vector<EventLogRecord> prefix(records.begin(), records.begin() + static_cast<std::ptrdiff_t>(i + 1));
        CHECK(replay_digest(PlatformConfig{}, prefix) == live_digests[i]);
    }

    Platform reopened(PlatformConfig{}, [&] {
        PlatformOptions o = fixed_clock();
        o.log_path = path;
        return o;
    }());
    CHECK(reopened.digest() == digest);
    CHECK(reopened.attendance("s1")["state"] == "closed");
    CHECK(reopened.environment("r1")["rejected"] == 1);
}

TEST_CASE("replay rejects records that cannot apply") {
    std::vector<EventLogRecord> records{{1, 0, Category::Chat, "mystery", json::object()}};
    CHECK_THROWS_AS(replay_digest(PlatformConfig{}, records), ServerError);
    records = {{2, 0, Category::Attendance, "session_closed", {{"session_id", "x"}}}};
    CHECK_THROWS_AS(replay_digest(PlatformConfig{}, records), ServerError);
}
