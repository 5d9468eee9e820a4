#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "smartclass/attendance/types.hpp"
#include "smartclass/common/error.hpp"
#include "smartclass/common/generator.hpp"
#include "smartclass/ecosmart/ecosmart.hpp"
#include "smartclass/retrieval/retrieval.hpp"

namespace smartclass::server {

enum class Errc {
    ConfigInvalid,
    StorageFailure,
    CorruptRecord,
    UnknownSession,
    UnknownStudent,
    UnknownDocument,
    UnknownNode,
    UnknownRoom,
    Conflict,
    BadRequest,
    ScenarioError,
};
const char* to_string(Errc e) noexcept;
using ServerError = Error<Errc>;

/// Thrown by load_config with every violation found, one per entry.
class ConfigInvalid : public ServerError {
public:
    explicit ConfigInvalid(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

enum class GeneratorMode { Stub, Remote };

struct GeneratorConfig {
    GeneratorMode mode = GeneratorMode::Stub;
    RemoteGeneratorSettings remote;
};

struct ListenConfig {
    std::string http_host = "127.0.0.1";
    int http_port = 8080;
    std::string device_host = "127.0.0.1";
    int device_port = 9100;
    std::string event_log = "smartclass-events.log";
    std::string admin_token;  ///< empty disables the admin check
    bool durable = true;      ///< fsync each append
};

struct PlatformConfig {
    attendance::FraudRules fraud_rules;
    attendance::Millis pairing_window_ms = 300'000;
    ecosmart::ControlConfig control;
    ecosmart::SensorCalibration calibration;
    retrieval::SplitParams split;
    std::size_t embedding_dimension = retrieval::kDefaultDimension;
    std::size_t top_k = retrieval::kDefaultTopK;
    std::size_t num_questions = 5;
    GeneratorConfig generator;
    ListenConfig listen;
};

/// Strict: unknown keys and wrongly typed values are violations. Omitted
/// optional fields keep their defaults. Throws ConfigInvalid.
PlatformConfig parse_config(const nlohmann::json& document);
/// Reads JSON from `path`. The remote API key may also come from the
/// SMARTCLASS_GENERATOR_KEY environment variable.
PlatformConfig load_config(const std::filesystem::path& path);

/// The config as JSON, in the shape parse_config accepts (API key omitted).
nlohmann::json to_json(const PlatformConfig& config);

}  // namespace smartclass::server
