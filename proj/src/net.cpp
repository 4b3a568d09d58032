#include "fedlearn/net.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <utility>

namespace fedlearn::net {

namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

sockaddr_in resolve(const Endpoint& e) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    const int rc = ::getaddrinfo(e.host.c_str(), nullptr, &hints, &found);
    if (rc != 0 || found == nullptr) {
        throw TransportError("cannot resolve host '" + e.host + "': " + ::gai_strerror(rc));
    }
    sockaddr_in addr{};
    std::memcpy(&addr, found->ai_addr, sizeof addr);
    ::freeaddrinfo(found);
    addr.sin_port = htons(e.port);
    return addr;
}

void set_nodelay(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

} // namespace

std::string Endpoint::to_string() const { return host + ":" + std::to_string(port); }

Endpoint parse_endpoint(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
        throw std::invalid_argument("expected host:port, got '" + text + "'");
    }
    const std::string port_text = text.substr(colon + 1);
    std::size_t used = 0;
    unsigned long port = 0;
    try {
        port = std::stoul(port_text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != port_text.size() || port > 65535) {
        throw std::invalid_argument("bad port in '" + text + "'");
    }
    return Endpoint{text.substr(0, colon), static_cast<std::uint16_t>(port)};
}

Socket::~Socket() { close(); }

Socket::Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}

Socket& Socket::operator=(Socket&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
}

void Socket::close() noexcept {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void Socket::write_all(std::span<const std::uint8_t> bytes) {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw TransportError(errno_text("send"));
        }
        sent += static_cast<std::size_t>(n);
    }
}

void Socket::read_exact(std::span<std::uint8_t> out) {
    std::size_t got = 0;
    while (got < out.size()) {
        const ssize_t n = ::recv(fd_, out.data() + got, out.size() - got, 0);
        if (n == 0) {
            throw TransportError("connection closed by peer");
        }
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw TransportError(errno_text("recv"));
        }
        got += static_cast<std::size_t>(n);
    }
}

bool Socket::wait_readable(std::chrono::milliseconds timeout) {
    pollfd p{fd_, POLLIN, 0};
    for (;;) {
        const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
        if (rc < 0 && errno == EINTR) {
            continue;
        }
        if (rc < 0) {
            throw TransportError(errno_text("poll"));
        }
        return rc > 0;
    }
}

Listener Listener::bind(const Endpoint& at) {
    Listener l;
    l.socket_ = Socket(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!l.socket_.valid()) {
        throw TransportError(errno_text("socket"));
    }
    int one = 1;
    ::setsockopt(l.socket_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr = resolve(at);
    if (::bind(l.socket_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        throw TransportError(errno_text(("bind " + at.to_string()).c_str()));
    }
    if (::listen(l.socket_.fd(), 64) != 0) {
        throw TransportError(errno_text("listen"));
    }
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(l.socket_.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
    l.bound_ = Endpoint{at.host, ntohs(bound.sin_port)};
    return l;
}

std::optional<Socket> Listener::accept(std::chrono::milliseconds timeout) {
    if (!socket_.wait_readable(timeout)) {
        return std::nullopt;
    }
    const int fd = ::accept4(socket_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) {
        throw TransportError(errno_text("accept"));
    }
    set_nodelay(fd);
    return Socket(fd);
}

Socket connect_to(const Endpoint& to) {
    Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!s.valid()) {
        throw TransportError(errno_text("socket"));
    }
    sockaddr_in addr = resolve(to);
    if (::connect(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        throw TransportError(errno_text(("connect " + to.to_string()).c_str()));
    }
    set_nodelay(s.fd());
    return s;
}

void write_frame(Socket& socket, std::span<const std::uint8_t> frame) { socket.write_all(frame); }

protocol::Bytes read_payload(Socket& socket) {
    std::uint8_t prefix[protocol::kLengthPrefix];
    socket.read_exact(prefix);
    const std::uint32_t length = (std::uint32_t{prefix[0]} << 24) | (std::uint32_t{prefix[1]} << 16) |
                                 (std::uint32_t{prefix[2]} << 8) | std::uint32_t{prefix[3]};
    if (length > protocol::kMaxPayload) {
        throw TransportError("peer announced a " + std::to_string(length) + "-byte frame (limit 4096)");
    }
    protocol::Bytes payload(length);
    socket.read_exact(payload);
    return payload;
}

} // namespace fedlearn::net
