#include "smartclass/server/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "smartclass/common/text.hpp"
#include "smartclass/device/tcp.hpp"
#include "smartclass/server/net.hpp"

namespace smartclass::server {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string_view>& fields, std::size_t from) {
    std::string out;
    for (std::size_t i = from; i < fields.size(); ++i) {
        if (!out.empty()) out += ' ';
        out += fields[i];
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ServerError(Errc::ScenarioError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::int64_t to_int(std::string_view s, std::size_t line) {
    try {
        std::size_t used = 0;
        const std::string str(s);
        const auto v = std::stoll(str, &used);
        if (used == str.size()) return v;
    } catch (const std::exception&) {
    }
    throw ServerError(Errc::ScenarioError, "line " + std::to_string(line) + ": not an integer: " + std::string(s));
}

struct NodeRun {
    device::NodeDescriptor descriptor;
    std::size_t order = 0;
    DeviceLink link;
    std::unique_ptr<device::Connection> connection;
    std::unique_ptr<device::NodeRunner> runner;
    std::vector<device::ScriptAction> pending;
    bool greeted = false;
};

class Runner {
public:
    Runner(const ScenarioOptions& options) : options_(options) {}

    void directive(std::string_view raw, std::size_t line) {
        line_ = line;
        const auto trimmed = text::trim(raw);
        if (trimmed.empty() || trimmed.front() == '#') return;
        const auto f = text::split_fields(trimmed);
        const auto& verb = f[0];

        if (verb == "config") {
            arity(f, 2);
            if (platform_) fail("config must come before every other directive");
            config_ = load_config(resolve(f[1]));
            return;
        }
        ensure_platform();
        if (verb == "registry") {
            arity(f, 2);
            std::istringstream in(read_file(resolve(f[1])));
            const auto registry = attendance::load_registry(in);
            for (const auto& s : registry.records()) {
                setup("POST", "/students",
                      {{"student_id", s.student_id}, {"display_name", s.display_name}, {"tag_uid", s.tag_uid}, {"mac", s.mac}});
            }
            say("registry: " + std::string(f[1]));
        } else if (verb == "student") {
            arity(f, 4, true);
            setup("POST", "/students",
                  {{"student_id", f[1]}, {"tag_uid", f[2]}, {"mac", f[3]}, {"display_name", join(f, 4)}});
            say("student " + std::string(f[1]));
        } else if (verb == "document") {
            arity(f, 3, true);
            auto r = setup("POST", "/documents",
                           {{"doc_id", f[1]}, {"text", read_file(resolve(f[2]))}, {"title", join(f, 3)}});
            say("document " + std::string(f[1]) + " version " + r.body["version"].get<std::string>().substr(0, 12));
        } else if (verb == "session") {
            arity(f, 7);
            setup("POST", "/sessions",
                  {{"session_id", f[1]}, {"class_id", f[2]}, {"room_id", f[3]}, {"network_id", f[4]},
                   {"window_start", to_int(f[5], line)}, {"window_end", to_int(f[6], line)}});
            say("session " + std::string(f[1]) + " open in " + std::string(f[3]));
        } else if (verb == "node") {
            arity(f, 4);
            auto type = device::node_type_from_string(f[2]);
            if (!type) fail("node type must be attendance or eco");
            const std::string id(f[1]);
            if (nodes_.contains(id)) fail("node " + id + " declared twice");
            auto& n = nodes_[id];
            n.descriptor = {id, *type, std::string(f[3])};
            n.order = nodes_.size();
            connect(n);
        } else if (verb == "at") {
            arity(f, 4, true);
            auto it = nodes_.find(std::string(f[1]));
            if (it == nodes_.end()) fail("unknown node " + std::string(f[1]));
            try {
                it->second.pending.push_back(device::parse_action(join(f, 2), line));
            } catch (const device::DeviceError& e) {
                fail(e.detail());
            }
        } else if (verb == "run") {
            arity(f, 1);
            run();
        } else if (verb == "chat") {
            arity(f, 5, true);
            run();
            auto r = api("POST", "/chat", {{"student_id", f[1]}, {"session_id", f[2]}, {"doc_id", f[3]}, {"question", join(f, 4)}});
            std::string summary = "chat " + std::string(f[1]) + ": " + std::to_string(r.status);
            if (r.status == 200) {
                const auto answer = r.body["answer"].get<std::string>();
                summary += " " + answer.substr(answer.find('\n') + 1) + " citations=" + r.body["citations"].dump();
            } else {
                summary += " " + r.body.value("error", std::string{});
            }
            report_.chats.push_back({r.status, r.body});
            say(summary);
        } else if (verb == "quiz") {
            arity(f, 4, true);
            run();
            auto r = api("POST", "/quiz", {{"doc_id", f[1]}, {"num_questions", to_int(f[2], line)}, {"topic", join(f, 3)}});
            std::string summary = "quiz " + std::string(f[1]) + ": " + std::to_string(r.status);
            if (r.status == 200) {
                summary += " " + std::to_string(r.body["questions"].size()) + " questions from " +
                           r.body["generator_id"].get<std::string>();
            } else {
                summary += " " + r.body.value("error", std::string{});
            }
            report_.quizzes.push_back({r.status, r.body});
            say(summary);
        } else if (verb == "close") {
            arity(f, 2);
            run();
            setup("POST", "/sessions/" + std::string(f[1]) + "/close", nullptr);
            say("session " + std::string(f[1]) + " closed");
        } else if (verb == "expect") {
            run();
            expect(f);
        } else {
            fail("unknown directive " + std::string(verb));
        }
    }

    ScenarioReport finish() {
        ensure_platform();
        run();
        for (auto& [id, n] : nodes_) report_.transcripts[id] = n.runner->transcript();
        report_.attendance = json::object();
        const auto sessions = platform_->sessions();
        for (const auto& s : sessions["sessions"]) {
            const auto id = s["session_id"].get<std::string>();
            report_.attendance[id] = platform_->attendance(id);
        }
        report_.live_digest = platform_->digest();
        report_.records = options_.log_path ? read_log_file(*options_.log_path).records : platform_->records();
        report_.replay_digest = server::replay_digest(*config_, report_.records);
        if (listener_) listener_->stop();
        return std::move(report_);
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw ServerError(Errc::ScenarioError, "line " + std::to_string(line_) + ": " + why);
    }

    void arity(const std::vector<std::string_view>& f, std::size_t n, bool at_least = false) const {
        if (at_least ? f.size() < n : f.size() != n) {
            fail(std::string(f[0]) + " expects " + (at_least ? "at least " : "") + std::to_string(n - 1) + " arguments");
        }
    }

    std::filesystem::path resolve(std::string_view p) const {
        std::filesystem::path path(p);
        return path.is_absolute() ? path : options_.base_dir / path;
    }

    void say(std::string s) { report_.output.push_back(std::move(s)); }

    void ensure_platform() {
        if (platform_) return;
        if (!config_) config_ = PlatformConfig{};
        auto popts = options_.platform;
        popts.log_path = options_.log_path;
        if (options_.log_path && std::filesystem::exists(*options_.log_path)) {
            throw ServerError(Errc::ScenarioError, "event log " + options_.log_path->string() + " already exists");
        }
        platform_ = std::make_unique<Platform>(*config_, std::move(popts));
        if (options_.over_tcp) {
            listener_ = std::make_unique<DeviceListener>(*platform_, "127.0.0.1", 0);
            listener_->start();
        }
    }

    Response api(std::string method, std::string path, json body) {
        return platform_->handle_api(
            {std::move(method), std::move(path), body.is_null() ? "" : body.dump(), config_->listen.admin_token});
    }

    Response setup(std::string method, std::string path, json body) {
        auto r = api(std::move(method), std::move(path), std::move(body));
        if (r.status >= 300) fail("platform refused (" + std::to_string(r.status) + "): " + r.body.value("error", std::string{}));
        return r;
    }

    void connect(NodeRun& n) {
        if (listener_) {
            n.connection = std::make_unique<device::TcpConnection>("127.0.0.1", listener_->port());
        } else {
            auto* platform = platform_.get();
            auto* link = &n.link;
            n.connection = std::make_unique<device::LoopbackConnection>(
                [platform, link](const device::WireMessage& m) { return platform->handle_device(*link, m); });
        }
        device::NodeOptions opts;
        opts.poll_period_ms = config_->control.poll_period_ms;
        n.runner = std::make_unique<device::NodeRunner>(n.descriptor, *n.connection, opts);
    }

    /// Plays every queued action, all nodes merged by (ts, declaration order).
    void run() {
        struct Item {
            Millis ts;
            std::size_t order;
            std::size_t index;
            NodeRun* node;
            device::PlannedMessage message;
        };
        std::vector<Item> timeline;
        device::NodeOptions opts;
        opts.poll_period_ms = config_->control.poll_period_ms;
        for (auto& [id, n] : nodes_) {
            device::ScenarioScript script{std::move(n.pending)};
            n.pending.clear();
            try {
                device::validate_script(n.descriptor, script);
            } catch (const device::DeviceError& e) {
                throw ServerError(Errc::ScenarioError, "node " + id + ": " + e.detail());
            }
            auto planned = device::plan_node(n.descriptor, script, opts);
            for (std::size_t i = 0; i < planned.size(); ++i) {
                timeline.push_back({planned[i].ts, n.order, i, &n, std::move(planned[i])});
            }
        }
        std::sort(timeline.begin(), timeline.end(), [](const Item& a, const Item& b) {
            return std::tie(a.ts, a.order, a.index) < std::tie(b.ts, b.order, b.index);
        });
        std::vector<NodeRun*> ordered;
        for (auto& [id, n] : nodes_) ordered.push_back(&n);
        std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->order < b->order; });
        for (auto* n : ordered) {
            if (n->greeted) continue;
            n->greeted = true;
            guarded(*n, [&] { n->runner->hello(); });
        }
        for (auto& item : timeline) guarded(*item.node, [&] { item.node->runner->send(item.message); });
    }

    template <typename F>
    void guarded(NodeRun& n, F&& f) {
        auto& t = n.runner->transcript();
        if (t.error) return;
        try {
            f();
        } catch (const device::DeviceError& e) {
            t.error = e.what();
            say("node " + n.descriptor.node_id + " lost its connection: " + e.what());
        }
    }

    void expect(const std::vector<std::string_view>& f) {
        if (f.size() < 2) fail("expect needs a kind");
        const std::string what = join(f, 1);
        std::string got;
        bool ok = false;
        if (f[1] == "status") {
            arity(f, 5);
            auto sheet = platform_->attendance(std::string(f[2]));
            got = "no such student";
            for (const auto& r : sheet["results"]) {
                if (r["student_id"] == f[3]) got = r["status"].get<std::string>();
            }
            ok = got == f[4];
        } else if (f[1] == "actuator") {
            arity(f, 5);
            auto env = platform_->environment(std::string(f[2]));
            got = env["actuators"].value(std::string(f[3]), false) ? "on" : "off";
            ok = got == f[4];
        } else if (f[1] == "display") {
            arity(f, 4, true);
            auto it = nodes_.find(std::string(f[2]));
            if (it == nodes_.end()) fail("unknown node " + std::string(f[2]));
            const auto lines = device::render_display(it->second.runner->transcript().display);
            const auto want = join(f, 3);
            for (const auto& l : lines) {
                if (!got.empty()) got += " | ";
                got += l;
                ok = ok || l == want;
            }
        } else if (f[1] == "toggles") {
            arity(f, 5);
            std::size_t count = 0;
            for (auto& [id, n] : nodes_) {
                if (n.descriptor.room_id != f[2]) continue;
                for (const auto& e : n.runner->transcript().entries) {
                    if (e.direction == device::Direction::Received && e.message.type == device::MessageType::ActuatorCmd &&
                        e.message.body["actuator"] == f[3]) {
                        ++count;
                    }
                }
            }
            got = std::to_string(count);
            ok = count == static_cast<std::size_t>(to_int(f[4], line_));
        } else {
            fail("unknown expectation " + std::string(f[1]));
        }
        if (ok) {
            say("expect " + what + ": ok");
        } else {
            say("expect " + what + ": FAILED (got " + got + ")");
            report_.failed_expectations.push_back("line " + std::to_string(line_) + ": " + what + " (got " + got + ")");
        }
    }

    const ScenarioOptions& options_;
    std::size_t line_ = 0;
    std::optional<PlatformConfig> config_;
    std::unique_ptr<Platform> platform_;
    std::unique_ptr<DeviceListener> listener_;
    std::map<std::string, NodeRun> nodes_;
    ScenarioReport report_;
};

}  // namespace

ScenarioReport run_platform_scenario(std::istream& script, const ScenarioOptions& options) {
    Runner runner(options);
    std::string line;
    std::size_t n = 0;
    while (std::getline(script, line)) runner.directive(line, ++n);
    return runner.finish();
}

ScenarioReport run_platform_scenario_file(const std::filesystem::path& path, ScenarioOptions options) {
    std::ifstream in(path);
    if (!in) throw ServerError(Errc::ScenarioError, "cannot read " + path.string());
    if (options.base_dir == ".") options.base_dir = path.parent_path().empty() ? "." : path.parent_path();
    return run_platform_scenario(in, options);
}

std::string format_attendance_table(const json& sheet) {
    std::ostringstream out;
    out << "session " << sheet.value("session_id", std::string{}) << " (" << sheet.value("state", std::string{}) << ")\n";
    std::size_t width = 10;
    for (const auto& r : sheet["results"]) width = std::max(width, r["student_id"].get<std::string>().size());
    for (const auto& r : sheet["results"]) {
        const auto id = r["student_id"].get<std::string>();
        out << "  " << id << std::string(width - id.size() + 2, ' ') << r["status"].get<std::string>();
        if (r["status"] != "Present") out << " (" << r["reason"].get<std::string>() << ")";
        out << '\n';
    }
    return out.str();
}

}  // namespace smartclass::server
