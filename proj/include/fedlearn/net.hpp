#pragma once

// Minimal blocking TCP transport with RAII descriptors and frame I/O.

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "fedlearn/protocol.hpp"

namespace fedlearn::net {

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Endpoint {
    std::string host;
    std::uint16_t port = 0;

    std::string to_string() const;
};

/// Parses "host:port". Throws std::invalid_argument.
Endpoint parse_endpoint(const std::string& text);

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) noexcept : fd_(fd) {}
    ~Socket();

    Socket(Socket&& other) noexcept;
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    bool valid() const noexcept { return fd_ >= 0; }
    int fd() const noexcept { return fd_; }
    void close() noexcept;

    void write_all(std::span<const std::uint8_t> bytes);
    /// Throws TransportError on EOF or error.
    void read_exact(std::span<std::uint8_t> out);

    /// Waits until readable; false on timeout.
    bool wait_readable(std::chrono::milliseconds timeout);

private:
    int fd_ = -1;
};

class Listener {
public:
    /// Binds and listens. Port 0 picks an ephemeral port.
    static Listener bind(const Endpoint& at);

    /// The actually bound address (useful after binding port 0).
    const Endpoint& endpoint() const noexcept { return bound_; }

    std::optional<Socket> accept(std::chrono::milliseconds timeout);

private:
    Socket socket_;
    Endpoint bound_;
};

Socket connect_to(const Endpoint& to);

void write_frame(Socket& socket, std::span<const std::uint8_t> frame);

/// Reads one frame and returns the payload. Throws TransportError when the
/// peer goes away or declares a payload larger than protocol::kMaxPayload.
protocol::Bytes read_payload(Socket& socket);

} // namespace fedlearn::net
