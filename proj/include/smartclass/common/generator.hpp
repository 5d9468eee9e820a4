#pragma once

#include <chrono>
#include <stdexcept>
#include <string>

namespace smartclass {

/// Raised by a text generator that cannot produce output (unreachable,
/// timed out, bad response). Callers fall back to a local stub.
class GeneratorUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Anything that turns a prompt into text.
class Generator {
public:
    virtual ~Generator() = default;
    virtual std::string generate(const std::string& prompt) const = 0;
    virtual std::string id() const = 0;
};

/// Settings for an HTTP text-generation endpoint.
struct RemoteGeneratorSettings {
    std::string endpoint;  ///< e.g. "http://127.0.0.1:9000/generate"
    std::string api_key;   ///< sent as a Bearer token when non-empty
    std::chrono::milliseconds timeout{10'000};
    std::string model_id = "remote";
};

/// POSTs {"prompt": ...} as JSON and expects {"text": ...} back.
/// Every failure surfaces as GeneratorUnavailable.
class RemoteGenerator final : public Generator {
public:
    explicit RemoteGenerator(RemoteGeneratorSettings settings);
    std::string generate(const std::string& prompt) const override;
    std::string id() const override { return settings_.model_id; }

private:
    RemoteGeneratorSettings settings_;
    std::string scheme_host_port_;
    std::string path_;
};

}  // namespace smartclass
