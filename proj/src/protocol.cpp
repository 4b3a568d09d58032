#include "fedlearn/protocol.hpp"

#include <bit>
#include <cctype>
#include <stdexcept>

namespace fedlearn::protocol {

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }

    void u32_be(std::uint32_t v) {
        for (int shift = 24; shift >= 0; shift -= 8) {
            out_.push_back(static_cast<std::uint8_t>(v >> shift));
        }
    }

    void f64_le(double v) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int shift = 0; shift < 64; shift += 8) {
            out_.push_back(static_cast<std::uint8_t>(bits >> shift));
        }
    }

    void model(const ModelWeights& w) {
        for (double v : flatten(w)) {
            f64_le(v);
        }
    }

    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

// Bounds-checked cursor. Every read either succeeds or records the offset
// where the buffer ran out.
class Reader {
public:
    Reader(std::span<const std::uint8_t> bytes, std::size_t base) : bytes_(bytes), base_(base) {}

    bool u8(std::uint8_t& v) {
        if (!need(1)) {
            return false;
        }
        v = bytes_[pos_++];
        return true;
    }

    bool u32_be(std::uint32_t& v) {
        if (!need(4)) {
            return false;
        }
        v = 0;
        for (int i = 0; i < 4; ++i) {
            v = (v << 8) | bytes_[pos_++];
        }
        return true;
    }

    bool f64_le(double& v) {
        if (!need(8)) {
            return false;
        }
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) {
            bits |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        }
        v = std::bit_cast<double>(bits);
        return true;
    }

    bool model(ModelWeights& w) {
        FlatWeights flat{};
        for (double& v : flat) {
            if (!f64_le(v)) {
                return false;
            }
        }
        w = unflatten(flat);
        return true;
    }

    std::size_t offset() const noexcept { return base_ + pos_; }
    bool at_end() const noexcept { return pos_ == bytes_.size(); }

    DecodeError truncated(const char* field) const {
        return DecodeError{offset(), std::string("truncated payload while reading ") + field};
    }

private:
    bool need(std::size_t n) const noexcept { return bytes_.size() - pos_ >= n; }

    std::span<const std::uint8_t> bytes_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

DecodeResult<Message> decode_payload_at(std::span<const std::uint8_t> payload, std::size_t base) {
    if (payload.size() > kMaxPayload) {
        return DecodeError{base, "payload exceeds 4096 bytes"};
    }
    Reader r(payload, base);
    std::uint8_t type = 0;
    if (!r.u8(type)) {
        return r.truncated("type byte");
    }

    Message message;
    switch (type) {
    case static_cast<std::uint8_t>(MessageType::Hello): {
        Hello h;
        if (!r.u8(h.version)) {
            return r.truncated("version");
        }
        if (!r.u32_be(h.client_id)) {
            return r.truncated("client_id");
        }
        message = h;
        break;
    }
    case static_cast<std::uint8_t>(MessageType::Assignment): {
        Assignment a;
        if (!r.u32_be(a.round)) {
            return r.truncated("round");
        }
        if (!r.model(a.model)) {
            return r.truncated("weights");
        }
        message = a;
        break;
    }
    case static_cast<std::uint8_t>(MessageType::Update): {
        Update u;
        if (!r.u32_be(u.round)) {
            return r.truncated("round");
        }
        if (!r.u32_be(u.client_id)) {
            return r.truncated("client_id");
        }
        const std::size_t count_at = r.offset();
        if (!r.u32_be(u.sample_count)) {
            return r.truncated("sample_count");
        }
        if (u.sample_count == 0) {
            return DecodeError{count_at, "sample_count must be at least 1"};
        }
        if (!r.model(u.model)) {
            return r.truncated("weights");
        }
        message = u;
        break;
    }
    case static_cast<std::uint8_t>(MessageType::Shutdown):
        message = Shutdown{};
        break;
    case static_cast<std::uint8_t>(MessageType::Ack):
        message = Ack{};
        break;
    case static_cast<std::uint8_t>(MessageType::Error): {
        ErrorFrame e;
        if (!r.u8(e.reason)) {
            return r.truncated("error reason");
        }
        message = e;
        break;
    }
    default:
        return DecodeError{base, "unknown message type 0x" + to_hex(payload.first(1))};
    }

    if (!r.at_end()) {
        return DecodeError{r.offset(), "trailing bytes after message body"};
    }
    return message;
}

template <class T>
DecodeResult<T> decode_as(std::span<const std::uint8_t> frame, const char* name) {
    auto decoded = decode_frame(frame);
    if (!decoded) {
        return decoded.error();
    }
    if (const T* m = std::get_if<T>(&decoded.value())) {
        return *m;
    }
    return DecodeError{kLengthPrefix, std::string("frame does not hold ") + name};
}

} // namespace

std::string DecodeError::describe() const { return "offset " + std::to_string(offset) + ": " + reason; }

Bytes encode_payload(const Message& message) {
    Writer w;
    std::visit(
        [&w](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Hello>) {
                w.u8(static_cast<std::uint8_t>(MessageType::Hello));
                w.u8(m.version);
                w.u32_be(m.client_id);
            } else if constexpr (std::is_same_v<T, Assignment>) {
                w.u8(static_cast<std::uint8_t>(MessageType::Assignment));
                w.u32_be(m.round);
                w.model(m.model);
            } else if constexpr (std::is_same_v<T, Update>) {
                w.u8(static_cast<std::uint8_t>(MessageType::Update));
                w.u32_be(m.round);
                w.u32_be(m.client_id);
                w.u32_be(m.sample_count);
                w.model(m.model);
            } else if constexpr (std::is_same_v<T, Shutdown>) {
                w.u8(static_cast<std::uint8_t>(MessageType::Shutdown));
            } else if constexpr (std::is_same_v<T, Ack>) {
                w.u8(static_cast<std::uint8_t>(MessageType::Ack));
            } else {
                w.u8(static_cast<std::uint8_t>(MessageType::Error));
                w.u8(m.reason);
            }
        },
        message);
    return w.take();
}

Bytes encode(const Message& message) {
    const Bytes payload = encode_payload(message);
    Writer w;
    w.u32_be(static_cast<std::uint32_t>(payload.size()));
    Bytes frame = w.take();
    frame.insert(frame.end(), payload.begin(), payload.end());
    return frame;
}

DecodeResult<Message> decode_payload(std::span<const std::uint8_t> payload) {
    return decode_payload_at(payload, 0);
}

DecodeResult<Message> decode_frame(std::span<const std::uint8_t> frame) {
    Reader r(frame, 0);
    std::uint32_t length = 0;
    if (!r.u32_be(length)) {
        return r.truncated("length prefix");
    }
    if (length > kMaxPayload) {
        return DecodeError{0, "declared length " + std::to_string(length) + " exceeds 4096"};
    }
    const std::size_t available = frame.size() - kLengthPrefix;
    if (available != length) {
        return DecodeError{kLengthPrefix + std::min<std::size_t>(available, length),
                           "length mismatch: prefix says " + std::to_string(length) + ", buffer holds " +
                               std::to_string(available)};
    }
    return decode_payload_at(frame.subspan(kLengthPrefix), kLengthPrefix);
}

Bytes encode_assignment(const Assignment& a) { return encode(a); }
Bytes encode_update(const Update& u) { return encode(u); }
Bytes encode_hello(const Hello& h) { return encode(h); }
Bytes encode_shutdown() { return encode(Shutdown{}); }

DecodeResult<Assignment> decode_assignment(std::span<const std::uint8_t> frame) {
    return decode_as<Assignment>(frame, "an ASSIGNMENT");
}

DecodeResult<Update> decode_update(std::span<const std::uint8_t> frame) {
    return decode_as<Update>(frame, "an UPDATE");
}

DecodeResult<Hello> decode_hello(std::span<const std::uint8_t> frame) { return decode_as<Hello>(frame, "a HELLO"); }

Bytes encode_model(const ModelWeights& model) {
    Writer w;
    w.model(model);
    return w.take();
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0x0F]);
    }
    return out;
}

Bytes from_hex(const std::string& text) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    Bytes out;
    int high = -1;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (high >= 0) {
                throw std::invalid_argument("from_hex: whitespace inside a byte");
            }
            continue;
        }
        const int v = nibble(c);
        if (v < 0) {
            throw std::invalid_argument(std::string("from_hex: not a hex digit: ") + c);
        }
        if (high < 0) {
            high = v;
        } else {
            out.push_back(static_cast<std::uint8_t>((high << 4) | v));
            high = -1;
        }
    }
    if (high >= 0) {
        throw std::invalid_argument("from_hex: odd number of digits");
    }
    return out;
}

} // namespace fedlearn::protocol
