#pragma once

#include <chrono>
#include <string>

#include "smartclass/device/node.hpp"

namespace smartclass::device {

/// Writes every byte or throws DeviceError(ConnectionLost).
void write_all(int fd, std::string_view bytes);

/// Newline-framed client connection over TCP.
class TcpConnection final : public Connection {
public:
    /// Throws DeviceError(ConnectionLost) if the connection cannot be made.
    TcpConnection(const std::string& host, int port,
                  std::chrono::milliseconds receive_timeout = std::chrono::milliseconds(10'000));
    ~TcpConnection() override;
    TcpConnection(const TcpConnection&) = delete;
    TcpConnection& operator=(const TcpConnection&) = delete;

    void send(const WireMessage& msg) override;
    WireMessage receive() override;

private:
    int fd_ = -1;
    FrameReader reader_;
};

}  // namespace smartclass::device
