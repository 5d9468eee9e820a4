#include "smartclass/server/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <httplib.h>

#include "smartclass/device/tcp.hpp"

namespace smartclass::server {

struct HttpFrontend::Impl {
    httplib::Server server;
};

HttpFrontend::HttpFrontend(Platform& platform, const std::string& host, int port) : impl_(std::make_unique<Impl>()) {
    auto& srv = impl_->server;
    auto handler = [&platform](const httplib::Request& req, httplib::Response& res) {
        auto out = platform.handle_api({req.method, req.path, req.body, req.get_header_value("X-Admin-Token")});
        res.status = out.status;
        if (!out.body.is_null()) res.set_content(out.body.dump(), "application/json");
    };
    const char* any = R"(/.*)";
    srv.Get(any, handler);
    srv.Post(any, handler);
    srv.Put(any, handler);
    srv.Delete(any, handler);
    srv.Patch(any, handler);
    srv.Options(any, handler);
    srv.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Headers", "Content-Type, X-Admin-Token");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    });
    port_ = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
    if (port_ <= 0) throw ServerError(Errc::StorageFailure, "cannot bind HTTP " + host + ":" + std::to_string(port));
}

HttpFrontend::~HttpFrontend() { stop(); }

void HttpFrontend::start() {
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void HttpFrontend::stop() {
    impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

DeviceListener::DeviceListener(Platform& platform, const std::string& host, int port) : platform_(platform) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* found = nullptr;
    const auto service = std::to_string(port);
    if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &found) != 0 || !found) {
        throw ServerError(Errc::StorageFailure, "cannot resolve " + host);
    }
    for (auto* ai = found; ai; ai = ai->ai_next) {
        listen_fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (listen_fd_ < 0) continue;
        int yes = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
        if (::bind(listen_fd_, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(listen_fd_, 64) == 0) break;
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    ::freeaddrinfo(found);
    if (listen_fd_ < 0) throw ServerError(Errc::StorageFailure, "cannot bind device " + host + ":" + service);

    sockaddr_storage addr{};
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port
                                             : reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
}

DeviceListener::~DeviceListener() {
    stop();
    if (listen_fd_ >= 0) ::close(listen_fd_);
}

void DeviceListener::start() {
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
}

void DeviceListener::stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    if (acceptor_.joinable()) acceptor_.join();
    {
        std::lock_guard lock(clients_mutex_);
        for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    for (auto& w : workers_) {
        if (w.joinable()) w.join();
    }
    workers_.clear();
}

void DeviceListener::accept_loop() {
    while (running_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR) continue;
            break;
        }
        std::lock_guard lock(clients_mutex_);
        if (!running_) {
            ::close(fd);
            break;
        }
        client_fds_.insert(fd);
        workers_.emplace_back([this, fd] { serve(fd); });
    }
}

void DeviceListener::serve(int fd) {
    DeviceLink link;
    device::FrameReader reader;
    char buf[4096];
    try {
        for (;;) {
            while (auto frame = reader.next_frame()) {
                std::vector<device::WireMessage> replies;
                try {
                    replies = platform_.handle_device(link, device::decode_message(*frame));
                } catch (const device::DeviceError& e) {
                    // Undecodable frames cannot be acked by seq; report and keep the link.
                    replies.push_back({device::MessageType::Ack, "server", 0,
                                       {{"ok", false}, {"reason", "DecodeError"}, {"detail", e.detail()}}});
                }
                std::string bytes;
                for (const auto& r : replies) bytes += device::encode_message(r);
                device::write_all(fd, bytes);
            }
            const auto n = ::recv(fd, buf, sizeof buf, 0);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) break;
            reader.feed(std::string_view(buf, static_cast<std::size_t>(n)));
        }
    } catch (const std::exception&) {
        // FrameTooLong, a lost peer or a storage failure ends this connection only.
    }
    std::lock_guard lock(clients_mutex_);
    client_fds_.erase(fd);
    ::close(fd);
}

}  // namespace smartclass::server
