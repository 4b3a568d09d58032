#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "fedlearn/contract.hpp"
#include "fedlearn/net.hpp"
#include "fedlearn/protocol.hpp"
#include "fedlearn/runtime.hpp"

extern char** environ;

namespace fedlearn {

namespace {

using Clock = std::chrono::steady_clock;

class ChildProcess {
public:
    explicit ChildProcess(const std::string& command) {
        std::string shell = "/bin/sh";
        std::string flag = "-c";
        std::string cmd = "exec " + command;
        char* argv[] = {shell.data(), flag.data(), cmd.data(), nullptr};
        const int rc = ::posix_spawn(&pid_, "/bin/sh", nullptr, nullptr, argv, environ);
        if (rc != 0) {
            throw net::TransportError("cannot spawn worker '" + command + "': " + std::strerror(rc));
        }
    }

    ChildProcess(ChildProcess&& other) noexcept : pid_(std::exchange(other.pid_, -1)) {}
    ChildProcess& operator=(ChildProcess&&) = delete;

    ~ChildProcess() {
        if (pid_ > 0) {
            ::kill(pid_, SIGTERM);
            ::waitpid(pid_, nullptr, 0);
        }
    }

    /// Non-blocking; returns the exit status once the child has gone.
    std::optional<int> poll_exit() {
        if (pid_ <= 0) {
            return exit_status_;
        }
        int status = 0;
        if (::waitpid(pid_, &status, WNOHANG) == pid_) {
            pid_ = -1;
            exit_status_ = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
        }
        return exit_status_;
    }

    /// Waits up to `grace` for a clean exit, then terminates the child.
    void reap(std::chrono::milliseconds grace) {
        const auto deadline = Clock::now() + grace;
        while (!poll_exit() && Clock::now() < deadline) {
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        if (pid_ > 0) {
            ::kill(pid_, SIGTERM);
            ::waitpid(pid_, nullptr, 0);
            pid_ = -1;
        }
    }

private:
    pid_t pid_ = -1;
    std::optional<int> exit_status_;
};

void send_error(net::Socket& socket, protocol::ErrorReason reason) {
    try {
        socket.write_all(protocol::encode(protocol::ErrorFrame{static_cast<std::uint8_t>(reason)}));
    } catch (const net::TransportError&) {
        // The peer is being dropped anyway.
    }
}

} // namespace

struct SocketPool::Impl {
    std::uint32_t n_clients = 0;
    net::Listener listener;
    std::vector<net::Socket> connections; // indexed by client id
    std::vector<bool> outstanding;
    std::vector<ChildProcess> children;
    bool stopped = false;

    net::Socket& connection(std::uint32_t id) {
        require(id < connections.size() && connections[id].valid(), "socket pool: client is not connected");
        return connections[id];
    }
};

SocketPool::SocketPool(std::uint32_t n_clients, const std::string& listen_address)
    : impl_(std::make_unique<Impl>()) {
    require(n_clients >= 1, "SocketPool: need at least one client");
    impl_->n_clients = n_clients;
    impl_->listener = net::Listener::bind(net::parse_endpoint(listen_address));
    impl_->connections.resize(n_clients);
    impl_->outstanding.assign(n_clients, false);
}

SocketPool::~SocketPool() {
    try {
        shutdown();
    } catch (...) {
    }
}

std::string SocketPool::address() const { return impl_->listener.endpoint().to_string(); }

std::uint32_t SocketPool::size() const { return impl_->n_clients; }

void SocketPool::spawn_workers(const std::string& command_template, std::uint64_t run_seed,
                               const ClientSettings& settings) {
    for (std::uint32_t id = 0; id < impl_->n_clients; ++id) {
        impl_->children.emplace_back(
            expand_worker_command(command_template, address(), id, client_seed(run_seed, id), settings));
    }
}

void SocketPool::await_workers(std::chrono::milliseconds timeout) {
    const auto deadline = Clock::now() + timeout;
    std::uint32_t joined = 0;
    for (const auto& c : impl_->connections) {
        joined += c.valid() ? 1 : 0;
    }

    while (joined < impl_->n_clients) {
        for (auto& child : impl_->children) {
            if (auto status = child.poll_exit(); status && *status != 0) {
                throw net::TransportError("a worker process exited with status " + std::to_string(*status) +
                                          " before completing the handshake");
            }
        }
        const auto now = Clock::now();
        if (now >= deadline) {
            throw net::TransportError("handshake timeout: " + std::to_string(joined) + " of " +
                                      std::to_string(impl_->n_clients) + " workers connected");
        }
        const auto slice = std::min<std::chrono::milliseconds>(
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now), std::chrono::milliseconds(100));
        std::optional<net::Socket> accepted = impl_->listener.accept(slice);
        if (!accepted) {
            continue;
        }
        net::Socket peer = std::move(*accepted);

        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        if (!peer.wait_readable(std::max(remaining, std::chrono::milliseconds(1)))) {
            continue; // silent peer; dropped
        }
        protocol::Bytes payload;
        try {
            payload = net::read_payload(peer);
        } catch (const net::TransportError&) {
            send_error(peer, protocol::ErrorReason::MalformedFrame);
            continue;
        }
        const auto decoded = protocol::decode_payload(payload);
        const auto* hello = decoded ? std::get_if<protocol::Hello>(&decoded.value()) : nullptr;
        if (hello == nullptr) {
            send_error(peer, protocol::ErrorReason::MalformedFrame);
            continue;
        }
        if (hello->version != protocol::kVersion) {
            send_error(peer, protocol::ErrorReason::VersionMismatch);
            continue;
        }
        if (hello->client_id >= impl_->n_clients || impl_->connections[hello->client_id].valid()) {
            send_error(peer, protocol::ErrorReason::ProtocolViolation);
            continue;
        }
        peer.write_all(protocol::encode(protocol::Ack{}));
        impl_->connections[hello->client_id] = std::move(peer);
        ++joined;
    }
}

void SocketPool::dispatch(std::uint32_t client_id, const Assignment& assignment) {
    net::Socket& socket = impl_->connection(client_id);
    try {
        socket.write_all(protocol::encode_assignment(assignment));
    } catch (const net::TransportError& e) {
        throw net::TransportError("client " + std::to_string(client_id) + ": " + e.what());
    }
    impl_->outstanding[client_id] = true;
}

Update SocketPool::collect() {
    std::vector<pollfd> fds;
    std::vector<std::uint32_t> ids;
    for (std::uint32_t id = 0; id < impl_->n_clients; ++id) {
        if (impl_->outstanding[id]) {
            fds.push_back(pollfd{impl_->connections[id].fd(), POLLIN, 0});
            ids.push_back(id);
        }
    }
    require(!fds.empty(), "collect: no outstanding assignments");

    for (;;) {
        const int rc = ::poll(fds.data(), fds.size(), -1);
        if (rc < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw net::TransportError(std::string("poll: ") + std::strerror(errno));
        }
        break;
    }

    for (std::size_t i = 0; i < fds.size(); ++i) {
        if (fds[i].revents == 0) {
            continue;
        }
        const std::uint32_t id = ids[i];
        protocol::Bytes payload;
        try {
            payload = net::read_payload(impl_->connections[id]);
        } catch (const net::TransportError& e) {
            throw net::TransportError("client " + std::to_string(id) + ": " + e.what());
        }
        const auto decoded = protocol::decode_payload(payload);
        if (!decoded) {
            send_error(impl_->connections[id], protocol::ErrorReason::MalformedFrame);
            throw ProtocolError("client " + std::to_string(id) + " sent a malformed frame: " +
                                decoded.error().describe());
        }
        if (const auto* err = std::get_if<protocol::ErrorFrame>(&decoded.value())) {
            throw ProtocolError("client " + std::to_string(id) + " reported error reason " +
                                std::to_string(err->reason));
        }
        const auto* update = std::get_if<Update>(&decoded.value());
        if (update == nullptr) {
            send_error(impl_->connections[id], protocol::ErrorReason::ProtocolViolation);
            throw ProtocolError("client " + std::to_string(id) + " sent something other than an UPDATE");
        }
        if (update->client_id != id) {
            send_error(impl_->connections[id], protocol::ErrorReason::ProtocolViolation);
            throw ProtocolError("connection of client " + std::to_string(id) + " carried an update for client " +
                                std::to_string(update->client_id));
        }
        impl_->outstanding[id] = false;
        return *update;
    }
    throw net::TransportError("poll reported readiness on no connection");
}

void SocketPool::shutdown() {
    if (impl_->stopped) {
        return;
    }
    impl_->stopped = true;
    const protocol::Bytes bye = protocol::encode_shutdown();
    for (auto& connection : impl_->connections) {
        if (connection.valid()) {
            try {
                connection.write_all(bye);
            } catch (const net::TransportError&) {
            }
        }
    }
    for (auto& child : impl_->children) {
        child.reap(std::chrono::milliseconds(2000));
    }
    for (auto& connection : impl_->connections) {
        connection.close();
    }
}

} // namespace fedlearn
