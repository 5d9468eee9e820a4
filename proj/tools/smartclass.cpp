// smartclass: run the platform, replay its event log, or play a scenario.
//
//   smartclass serve    [--config path] [--log path]
//   smartclass replay   --log path [--config path]
//   smartclass scenario --script path [--log path] [--tcp] [--transcripts]

#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "smartclass/server/net.hpp"
#include "smartclass/server/scenario.hpp"

using namespace smartclass;
using namespace smartclass::server;

namespace {

constexpr int kFailure = 1;
constexpr int kBadArguments = 2;
constexpr int kCorruptLog = 3;

std::optional<PlatformConfig> config_from(const std::optional<std::string>& path) {
    if (!path) return PlatformConfig{};
    try {
        return load_config(*path);
    } catch (const ConfigInvalid& e) {
        for (const auto& v : e.violations()) std::cerr << "smartclass: config: " << v << '\n';
        return std::nullopt;
    }
}

int serve(const std::optional<std::string>& config_path, const std::optional<std::string>& log_override) {
    auto config = config_from(config_path);
    if (!config) return kBadArguments;

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);  // inherited by every server thread

    PlatformOptions options;
    options.log_path = log_override.value_or(config->listen.event_log);
    Platform platform(*config, options);
    std::cerr << "event log " << options.log_path->string() << ": " << platform.last_seq() << " records replayed"
              << (platform.recovered_torn_tail() ? " (torn tail discarded)" : "") << '\n';

    HttpFrontend http(platform, config->listen.http_host, config->listen.http_port);
    DeviceListener devices(platform, config->listen.device_host, config->listen.device_port);
    http.start();
    devices.start();
    std::cerr << "http on " << config->listen.http_host << ':' << http.port() << ", devices on "
              << config->listen.device_host << ':' << devices.port() << '\n';

    int sig = 0;
    sigwait(&signals, &sig);
    std::cerr << "stopping at seq " << platform.last_seq() << '\n';
    devices.stop();
    http.stop();
    return 0;
}

int replay(const std::string& log_path, const std::optional<std::string>& config_path) {
    auto config = config_from(config_path);
    if (!config) return kBadArguments;
    LogContents contents;
    try {
        contents = read_log_file(log_path);
    } catch (const ServerError& e) {
        std::cerr << "smartclass: " << e.what() << '\n';
        return e.code() == Errc::CorruptRecord ? kCorruptLog : kFailure;
    }
    PlatformState state;
    try {
        for (const auto& r : contents.records) state.apply(r, *config);
    } catch (const ServerError& e) {
        std::cerr << "smartclass: " << e.what() << '\n';
        return kCorruptLog;
    }
    std::cout << "records: " << contents.records.size() << (contents.torn_tail ? " (torn tail ignored)" : "") << '\n';
    const auto canonical = canonical_state(state, *config);
    for (const auto& [id, s] : canonical["attendance"].items()) {
        std::cout << "session " << id << " (" << (s["open"].get<bool>() ? "open" : "closed") << ")\n";
        for (const auto& r : s["results"]) {
            std::cout << "  " << r[0].get<std::string>() << "  " << r[1].get<std::string>() << '\n';
        }
    }
    for (const auto& [room, r] : canonical["rooms"].items()) std::cout << "room " << room << ": " << r["actuators"].dump() << '\n';
    std::cout << "digest: " << state_digest(state, *config) << '\n';
    return 0;
}

int scenario(const std::string& script, const std::optional<std::string>& log_path, bool tcp, bool transcripts) {
    ScenarioOptions options;
    if (log_path) options.log_path = *log_path;
    options.over_tcp = tcp;
    ScenarioReport report;
    try {
        report = run_platform_scenario_file(script, options);
    } catch (const std::exception& e) {
        std::cerr << "smartclass: " << e.what() << '\n';
        return kBadArguments;
    }
    for (const auto& line : report.output) std::cout << line << '\n';
    if (transcripts) {
        for (const auto& [id, t] : report.transcripts) std::cout << "\n# node " << id << '\n' << t.format();
    }
    std::cout << '\n';
    for (const auto& [id, sheet] : report.attendance.items()) std::cout << format_attendance_table(sheet);
    std::cout << "\nrecords: " << report.records.size() << '\n'
              << "live digest:   " << report.live_digest << '\n'
              << "replay digest: " << report.replay_digest << '\n';
    if (report.live_digest != report.replay_digest) std::cout << "replay MISMATCH\n";
    for (const auto& f : report.failed_expectations) std::cerr << "failed: " << f << '\n';
    return report.ok() ? 0 : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Smart classroom platform"};
    app.require_subcommand(1);

    std::optional<std::string> config_path;
    std::optional<std::string> log_path;
    std::string script;
    bool tcp = false;
    bool transcripts = false;

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API and the device listener");
    serve_cmd->add_option("-c,--config", config_path, "JSON config file");
    serve_cmd->add_option("-l,--log", log_path, "Event log (overrides the config)");

    auto* replay_cmd = app.add_subcommand("replay", "Fold an event log and print the resulting state");
    replay_cmd->add_option("-l,--log", log_path, "Event log")->required();
    replay_cmd->add_option("-c,--config", config_path, "Config the log was written under");

    auto* scenario_cmd = app.add_subcommand("scenario", "Play a scenario against a fresh in-process platform");
    scenario_cmd->add_option("-s,--script", script, "Scenario script")->required();
    scenario_cmd->add_option("-l,--log", log_path, "Write the event log here (must not exist)");
    scenario_cmd->add_flag("--tcp", tcp, "Connect the simulated nodes over a local TCP socket");
    scenario_cmd->add_flag("--transcripts", transcripts, "Print every node's message transcript");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kBadArguments;
    }

    try {
        if (*serve_cmd) return serve(config_path, log_path);
        if (*replay_cmd) return replay(*log_path, config_path);
        return scenario(script, log_path, tcp, transcripts);
    } catch (const std::exception& e) {
        std::cerr << "smartclass: " << e.what() << '\n';
        return kFailure;
    }
}
