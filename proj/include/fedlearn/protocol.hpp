#pragma once

// Binary wire format shared by the server and every worker implementation.
//
// Frame:    u32 big-endian payload length (<= 4096), then the payload.
// Payload:  one type byte, then the body.
//   0x00 HELLO       u8 version (0x01), u32 BE client_id
//   0x01 ASSIGNMENT  u32 BE round, 17 x f64 LE weights
//   0x02 UPDATE      u32 BE round, u32 BE client_id, u32 BE sample_count, 17 x f64 LE weights
//   0x03 SHUTDOWN    (empty)
//   0x04 ACK         (empty)
//   0x7F ERROR       u8 reason
// Integers are big-endian and floats little-endian. Weights follow the
// canonical order of flatten().

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fedlearn/messages.hpp"

namespace fedlearn::protocol {

inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kLengthPrefix = 4;
inline constexpr std::size_t kMaxPayload = 4096;
inline constexpr std::size_t kModelBytes = kWeightCount * 8;

enum class MessageType : std::uint8_t {
    Hello = 0x00,
    Assignment = 0x01,
    Update = 0x02,
    Shutdown = 0x03,
    Ack = 0x04,
    Error = 0x7F,
};

enum class ErrorReason : std::uint8_t {
    VersionMismatch = 0x01,
    MalformedFrame = 0x02,
    ProtocolViolation = 0x03,
};

struct Hello {
    std::uint8_t version = kVersion;
    std::uint32_t client_id = 0;
    friend bool operator==(const Hello&, const Hello&) = default;
};

struct Ack {
    friend bool operator==(const Ack&, const Ack&) = default;
};

struct Shutdown {
    friend bool operator==(const Shutdown&, const Shutdown&) = default;
};

/// Reason byte kept raw so any value decodes.
struct ErrorFrame {
    std::uint8_t reason = 0;
    friend bool operator==(const ErrorFrame&, const ErrorFrame&) = default;
};

using Message = std::variant<Hello, Assignment, Update, Shutdown, Ack, ErrorFrame>;
using Bytes = std::vector<std::uint8_t>;

struct DecodeError {
    std::size_t offset = 0; // byte offset into the buffer handed to the decoder
    std::string reason;

    std::string describe() const;
};

template <class T>
class DecodeResult {
public:
    DecodeResult(T value) : state_(std::move(value)) {}
    DecodeResult(DecodeError error) : state_(std::move(error)) {}

    bool ok() const noexcept { return std::holds_alternative<T>(state_); }
    explicit operator bool() const noexcept { return ok(); }

    const T& value() const { return std::get<T>(state_); }
    const DecodeError& error() const { return std::get<DecodeError>(state_); }

private:
    std::variant<T, DecodeError> state_;
};

/// Payload bytes (type byte + body), without the length prefix.
Bytes encode_payload(const Message& message);

/// Length prefix + payload.
Bytes encode(const Message& message);

DecodeResult<Message> decode_payload(std::span<const std::uint8_t> payload);

/// Decodes a complete frame; the buffer must hold exactly one frame.
DecodeResult<Message> decode_frame(std::span<const std::uint8_t> frame);

Bytes encode_assignment(const Assignment& a);
Bytes encode_update(const Update& u);
Bytes encode_hello(const Hello& h);
Bytes encode_shutdown();

DecodeResult<Assignment> decode_assignment(std::span<const std::uint8_t> frame);
DecodeResult<Update> decode_update(std::span<const std::uint8_t> frame);
DecodeResult<Hello> decode_hello(std::span<const std::uint8_t> frame);

/// The 136-byte image of a model in canonical order.
Bytes encode_model(const ModelWeights& model);

std::string to_hex(std::span<const std::uint8_t> bytes);
/// Accepts whitespace between byte pairs; throws std::invalid_argument on bad input.
Bytes from_hex(const std::string& text);

} // namespace fedlearn::protocol
