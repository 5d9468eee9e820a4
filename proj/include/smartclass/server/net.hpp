#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "smartclass/server/platform.hpp"

namespace smartclass::server {

/// JSON REST front-end. Routes every request through Platform::handle_api;
/// the admin token travels in the X-Admin-Token header.
class HttpFrontend {
public:
    /// Binds immediately; port 0 picks a free port. Throws ServerError(StorageFailure)
    /// when the address cannot be bound.
    HttpFrontend(Platform& platform, const std::string& host, int port);
    ~HttpFrontend();
    HttpFrontend(const HttpFrontend&) = delete;
    HttpFrontend& operator=(const HttpFrontend&) = delete;

    int port() const noexcept { return port_; }
    void start();  ///< serves on a background thread
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
    std::thread thread_;
};

/// Newline-framed TCP listener for edge nodes, one thread per connection.
class DeviceListener {
public:
    DeviceListener(Platform& platform, const std::string& host, int port);
    ~DeviceListener();
    DeviceListener(const DeviceListener&) = delete;
    DeviceListener& operator=(const DeviceListener&) = delete;

    int port() const noexcept { return port_; }
    void start();
    void stop();

private:
    void accept_loop();
    void serve(int fd);

    Platform& platform_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::mutex clients_mutex_;
    std::set<int> client_fds_;
    std::vector<std::thread> workers_;
};

}  // namespace smartclass::server
