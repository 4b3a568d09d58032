#include <ostream>

#include "fedlearn/net.hpp"
#include "fedlearn/protocol.hpp"
#include "fedlearn/runtime.hpp"

namespace fedlearn {

int run_worker(const WorkerOptions& options, std::ostream& diagnostics) {
    const auto tag = "worker " + std::to_string(options.client_id) + ": ";
    try {
        net::Socket socket = net::connect_to(net::parse_endpoint(options.server_address));
        socket.write_all(protocol::encode_hello(protocol::Hello{protocol::kVersion, options.client_id}));

        const auto reply = protocol::decode_payload(net::read_payload(socket));
        if (!reply || !std::holds_alternative<protocol::Ack>(reply.value())) {
            if (reply) {
                if (const auto* err = std::get_if<protocol::ErrorFrame>(&reply.value())) {
                    diagnostics << tag << "handshake rejected by server (reason " << int(err->reason) << ")\n";
                    return 3;
                }
            }
            diagnostics << tag << "expected ACK after HELLO\n";
            return 3;
        }

        Rng rng(options.seed);
        for (;;) {
            const protocol::Bytes payload = net::read_payload(socket);
            const auto decoded = protocol::decode_payload(payload);
            if (!decoded) {
                socket.write_all(protocol::encode(
                    protocol::ErrorFrame{static_cast<std::uint8_t>(protocol::ErrorReason::MalformedFrame)}));
                diagnostics << tag << "malformed frame: " << decoded.error().describe() << "\n";
                return 4;
            }
            const protocol::Message& message = decoded.value();
            if (std::holds_alternative<protocol::Shutdown>(message)) {
                return 0;
            }
            if (const auto* assignment = std::get_if<Assignment>(&message)) {
                const Update update = client_step(*assignment, options.client_id, rng, options.settings);
                socket.write_all(protocol::encode_update(update));
                continue;
            }
            if (const auto* err = std::get_if<protocol::ErrorFrame>(&message)) {
                diagnostics << tag << "server reported error reason " << int(err->reason) << "\n";
                return 4;
            }
            socket.write_all(protocol::encode(
                protocol::ErrorFrame{static_cast<std::uint8_t>(protocol::ErrorReason::ProtocolViolation)}));
            diagnostics << tag << "unexpected message from server\n";
            return 4;
        }
    } catch (const std::exception& e) {
        diagnostics << tag << e.what() << "\n";
        return 2;
    }
}

} // namespace fedlearn
