#include "smartclass/common/generator.hpp"

#include <httplib.h>
#include <json.hpp>

namespace smartclass {

RemoteGenerator::RemoteGenerator(RemoteGeneratorSettings settings) : settings_(std::move(settings)) {
    // Split "http://host:port/path" into the client base and the request path.
    const auto& url = settings_.endpoint;
    auto scheme_end = url.find("://");
    auto path_begin = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_begin == std::string::npos) {
        scheme_host_port_ = url;
        path_ = "/";
    } else {
        scheme_host_port_ = url.substr(0, path_begin);
        path_ = url.substr(path_begin);
    }
}

std::string RemoteGenerator::generate(const std::string& prompt) const {
    if (settings_.endpoint.empty()) throw GeneratorUnavailable("no endpoint configured");

    httplib::Client client(scheme_host_port_);
    if (!client.is_valid()) throw GeneratorUnavailable("invalid endpoint " + settings_.endpoint);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(settings_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(settings_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!settings_.api_key.empty()) headers.emplace("Authorization", "Bearer " + settings_.api_key);

    nlohmann::json body{{"prompt", prompt}};
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw GeneratorUnavailable("request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw GeneratorUnavailable("HTTP status " + std::to_string(res->status));

    try {
        auto reply = nlohmann::json::parse(res->body);
        auto text = reply.at("text").get<std::string>();
        if (text.empty()) throw GeneratorUnavailable("empty text");
        return text;
    } catch (const nlohmann::json::exception& e) {
        throw GeneratorUnavailable(std::string("bad response: ") + e.what());
    }
}

}  // namespace smartclass
