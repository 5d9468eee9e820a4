#include <string_view>

#include "smartclass/common/text.hpp"
#include "smartclass/server/platform.hpp"

namespace smartclass::server {

using nlohmann::json;

namespace {

struct HttpError {
    int status;
    json body;
};

[[noreturn]] void fail(int status, std::string error, json extra = json::object()) {
    extra["error"] = std::move(error);
    throw HttpError{status, std::move(extra)};
}

std::vector<std::string> path_segments(std::string_view path) {
    if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i <= path.size()) {
        auto j = path.find('/', i);
        if (j == std::string_view::npos) j = path.size();
        if (j > i) out.emplace_back(path.substr(i, j - i));
        i = j + 1;
    }
    return out;
}

json parse_body(const std::string& body) {
    auto j = json::parse(body, nullptr, false);
    if (j.is_discarded()) fail(400, "body is not valid JSON", {{"field", "body"}});
    if (!j.is_object()) fail(400, "body must be a JSON object", {{"field", "body"}});
    return j;
}

std::string get_str(const json& j, const char* key, bool required = true) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        if (required) fail(400, std::string(key) + " is required", {{"field", key}});
        return {};
    }
    if (!it->is_string()) fail(400, std::string(key) + " must be a string", {{"field", key}});
    return it->get<std::string>();
}

std::optional<std::int64_t> get_int(const json& j, const char* key, bool required, std::int64_t min) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        if (required) fail(400, std::string(key) + " is required", {{"field", key}});
        return std::nullopt;
    }
    if (!it->is_number_integer() || it->get<std::int64_t>() < min) {
        fail(400, std::string(key) + " must be an integer >= " + std::to_string(min), {{"field", key}});
    }
    return it->get<std::int64_t>();
}

void require_method(const Request& r, std::initializer_list<std::string_view> allowed) {
    for (auto m : allowed) {
        if (r.method == m) return;
    }
    fail(405, "method " + r.method + " not allowed on " + r.path);
}

int status_for(attendance::Errc e) {
    using E = attendance::Errc;
    switch (e) {
        case E::DuplicateTag:
        case E::DuplicateMac:
        case E::DuplicateStudentId:
        case E::SessionClosed: return 409;
        default: return 400;
    }
}

int status_for(assistant::Errc e) {
    using E = assistant::Errc;
    switch (e) {
        case E::AccessDenied: return 403;
        case E::UnknownSession:
        case E::UnknownStudent:
        case E::UnknownDocument: return 404;
        case E::NoContext: return 422;
        case E::InvalidQuery: return 400;
    }
    return 500;
}

int status_for(Errc e) {
    switch (e) {
        case Errc::BadRequest: return 400;
        case Errc::UnknownSession:
        case Errc::UnknownStudent:
        case Errc::UnknownDocument:
        case Errc::UnknownNode:
        case Errc::UnknownRoom: return 404;
        case Errc::Conflict: return 409;
        default: return 500;
    }
}

}  // namespace

Response Platform::handle_api(const Request& request) {
    const auto seg = path_segments(request.path);
    auto admin = [&] {
        const auto& token = config_.listen.admin_token;
        if (!token.empty() && request.admin_token != token) fail(401, "admin token required");
    };
    try {
        if (request.method == "OPTIONS") return {204, nullptr};
        if (seg.size() == 1 && seg[0] == "health") {
            require_method(request, {"GET"});
            return {200, {{"status", "ok"}, {"last_seq", last_seq()}}};
        }
        if (seg.size() == 1 && seg[0] == "students") {
            require_method(request, {"GET", "POST"});
            if (request.method == "GET") return {200, students()};
            admin();
            auto b = parse_body(request.body);
            return {201, register_student(get_str(b, "student_id"), get_str(b, "display_name", false),
                                          get_str(b, "tag_uid"), get_str(b, "mac"))};
        }
        if (seg.size() == 1 && seg[0] == "sessions") {
            require_method(request, {"GET", "POST"});
            if (request.method == "GET") return {200, sessions()};
            admin();
            auto b = parse_body(request.body);
            SessionSpec spec;
            spec.session_id = get_str(b, "session_id", false);
            spec.class_id = get_str(b, "class_id");
            spec.room_id = get_str(b, "room_id");
            spec.network_id = get_str(b, "network_id");
            spec.window_start = *get_int(b, "window_start", true, INT64_MIN);
            spec.window_end = *get_int(b, "window_end", true, INT64_MIN);
            spec.pairing_window_ms = get_int(b, "pairing_window_ms", false, 1);
            return {201, open_session(spec)};
        }
        if (seg.size() == 3 && seg[0] == "sessions" && seg[2] == "close") {
            require_method(request, {"POST"});
            admin();
            return {200, close_session(seg[1])};
        }
        if (seg.size() == 3 && seg[0] == "sessions" && seg[2] == "attendance") {
            require_method(request, {"GET"});
            return {200, attendance(seg[1])};
        }
        if (seg.size() == 1 && seg[0] == "documents") {
            require_method(request, {"GET", "POST"});
            if (request.method == "GET") {
                std::shared_lock lock(mutex_);
                json docs = json::array();
                for (const auto& [id, d] : state_.documents) {
                    docs.push_back({{"doc_id", id}, {"title", d.title}, {"version", d.version}, {"bytes", d.text.size()}});
                }
                return {200, {{"documents", docs}}};
            }
            admin();
            auto b = parse_body(request.body);
            return {201, ingest_document(get_str(b, "doc_id"), get_str(b, "title", false), get_str(b, "text"))};
        }
        if (seg.size() == 1 && seg[0] == "chat") {
            require_method(request, {"POST"});
            auto b = parse_body(request.body);
            assistant::ChatQuery q{get_str(b, "student_id"), get_str(b, "session_id"), get_str(b, "doc_id"),
                                   get_str(b, "question"), std::nullopt};
            if (auto k = get_int(b, "k", false, 1)) q.k = static_cast<std::size_t>(*k);
            return {200, chat(q)};
        }
        if (seg.size() == 1 && seg[0] == "quiz") {
            require_method(request, {"POST"});
            auto b = parse_body(request.body);
            std::optional<std::size_t> n;
            if (auto v = get_int(b, "num_questions", false, 0)) n = static_cast<std::size_t>(*v);
            return {200, make_quiz(get_str(b, "doc_id"), get_str(b, "topic"), n)};
        }
        if (seg.size() == 2 && seg[0] == "environment") {
            require_method(request, {"GET"});
            return {200, environment(seg[1])};
        }
        if (seg.size() == 2 && seg[0] == "nodes" && seg[1] == "events") {
            require_method(request, {"POST"});
            auto msg = device::decode_message(request.body);
            std::lock_guard lock(injected_mutex_);
            auto& link = injected_links_[msg.node_id];
            json replies = json::array();
            for (const auto& m : handle_device(link, msg)) replies.push_back(json::parse(device::encode_message(m)));
            return {200, {{"replies", replies}}};
        }
        if (seg.size() == 2 && seg[0] == "state" && seg[1] == "digest") {
            require_method(request, {"GET"});
            std::shared_lock lock(mutex_);
            return {200, {{"digest", state_digest(state_, config_)}, {"last_seq", state_.last_seq}}};
        }
        fail(404, "no route for " + request.path);
    } catch (const HttpError& e) {
        return {e.status, e.body};
    } catch (const ServerError& e) {
        json body{{"error", e.detail()}, {"code", to_string(e.code())}};
        if (e.code() == Errc::BadRequest) body["field"] = e.detail().substr(0, e.detail().find(':'));
        return {status_for(e.code()), body};
    } catch (const attendance::AttendanceError& e) {
        return {status_for(e.code()), {{"error", e.detail()}, {"code", to_string(e.code())}}};
    } catch (const assistant::AssistantError& e) {
        json body{{"error", e.detail()}, {"code", to_string(e.code())}};
        if (e.code() == assistant::Errc::AccessDenied) {
            // detail is "<Status> (<Reason>)"
            const auto& d = e.detail();
            const auto open = d.find(" (");
            if (open != std::string::npos && d.back() == ')') {
                body["status"] = d.substr(0, open);
                body["reason"] = d.substr(open + 2, d.size() - open - 3);
            }
        }
        return {status_for(e.code()), body};
    } catch (const quiz::QuizError& e) {
        json body{{"error", e.detail()}, {"code", to_string(e.code())}};
        if (e.code() == quiz::Errc::InvalidRequest) {
            body["field"] = e.detail();
            return {400, body};
        }
        return {422, body};
    } catch (const retrieval::RetrievalError& e) {
        const int status = e.code() == retrieval::Errc::EmptyIndex ? 422 : 400;
        return {status, {{"error", e.detail()}, {"code", to_string(e.code())}}};
    } catch (const device::DeviceError& e) {
        return {400, {{"error", e.detail()}, {"code", to_string(e.code())}, {"field", "body"}}};
    } catch (const std::exception& e) {
        return {500, {{"error", e.what()}}};
    }
}

}  // namespace smartclass::server
