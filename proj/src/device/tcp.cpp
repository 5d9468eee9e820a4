#include "smartclass/device/tcp.hpp"

#include <netdb.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace smartclass::device {

void write_all(int fd, std::string_view bytes) {
    while (!bytes.empty()) {
        const auto n = ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) throw DeviceError(Errc::ConnectionLost, std::string("send: ") + std::strerror(errno));
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
}

TcpConnection::TcpConnection(const std::string& host, int port, std::chrono::milliseconds receive_timeout) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    const auto service = std::to_string(port);
    if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &found) != 0 || !found) {
        throw DeviceError(Errc::ConnectionLost, "cannot resolve " + host);
    }
    for (auto* ai = found; ai; ai = ai->ai_next) {
        fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd_ < 0) continue;
        if (::connect(fd_, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd_);
        fd_ = -1;
    }
    ::freeaddrinfo(found);
    if (fd_ < 0) throw DeviceError(Errc::ConnectionLost, "cannot connect to " + host + ":" + service);

    timeval tv{};
    tv.tv_sec = static_cast<time_t>(receive_timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((receive_timeout.count() % 1000) * 1000);
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
}

TcpConnection::~TcpConnection() {
    if (fd_ >= 0) ::close(fd_);
}

void TcpConnection::send(const WireMessage& msg) { write_all(fd_, encode_message(msg)); }

WireMessage TcpConnection::receive() {
    char buf[4096];
    for (;;) {
        if (auto frame = reader_.next_frame()) return decode_message(*frame);
        const auto n = ::recv(fd_, buf, sizeof buf, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n == 0) throw DeviceError(Errc::ConnectionLost, "peer closed the connection");
        if (n < 0) throw DeviceError(Errc::ConnectionLost, std::string("recv: ") + std::strerror(errno));
        reader_.feed(std::string_view(buf, static_cast<std::size_t>(n)));
    }
}

}  // namespace smartclass::device
