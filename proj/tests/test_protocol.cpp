#include <doctest.h>

#include <bit>
#include <string>

#include "fedlearn/datagen.hpp"
#include "fedlearn/protocol.hpp"
#include "test_support.hpp"

using namespace fedlearn;
using namespace fedlearn::protocol;

namespace {

ModelWeights dyadic_model() {
    // k/16 - 0.5 for k = 0..16: exactly representable, so the byte image is
    // checkable by hand.
    FlatWeights flat{};
    for (std::size_t i = 0; i < kWeightCount; ++i) {
        flat[i] = static_cast<double>(i) / 16.0 - 0.5;
    }
    return unflatten(flat);
}

std::string fixture(const std::string& name) {
    return testing_support::read_file(std::string(FEDLEARN_FIXTURE_DIR) + "/" + name);
}

} // namespace

TEST_CASE("frame sizes") {
    CHECK(encode_assignment(Assignment{3, dyadic_model()}).size() == 145);
    CHECK(encode_update(Update{3, 1, dyadic_model(), 250}).size() == 153);
    CHECK(encode_hello(Hello{kVersion, 9}).size() == 10);
    CHECK(encode_shutdown() == Bytes{0x00, 0x00, 0x00, 0x01, 0x03});
}

TEST_CASE("field layout") {
    const Bytes frame = encode_update(Update{0x01020304, 0x0A0B0C0D, ModelWeights{}, 250});
    CHECK(frame[0] == 0x00);
    CHECK(frame[3] == 149);
    CHECK(frame[4] == 0x02);
    CHECK(Bytes(frame.begin() + 5, frame.begin() + 9) == Bytes{0x01, 0x02, 0x03, 0x04});
    CHECK(Bytes(frame.begin() + 9, frame.begin() + 13) == Bytes{0x0A, 0x0B, 0x0C, 0x0D});
    CHECK(Bytes(frame.begin() + 13, frame.begin() + 17) == Bytes{0x00, 0x00, 0x00, 0xFA});
    CHECK(std::all_of(frame.begin() + 17, frame.end(), [](std::uint8_t b) { return b == 0; }));

    const Bytes zero_model = encode_assignment(Assignment{0, ModelWeights{}});
    CHECK(std::all_of(zero_model.begin() + 9, zero_model.end(), [](std::uint8_t b) { return b == 0; }));

    // 0.5 = 0x3FE0000000000000, written least significant byte first.
    ModelWeights half{};
    half.input[0][0] = 0.5;
    const Bytes image = encode_model(half);
    CHECK(Bytes(image.begin(), image.begin() + 8) == Bytes{0, 0, 0, 0, 0, 0, 0xE0, 0x3F});
}

TEST_CASE("golden model image") {
    const Bytes expected = from_hex(fixture("golden_model.hex"));
    REQUIRE(expected.size() == kModelBytes);
    CHECK(encode_model(dyadic_model()) == expected);
}

TEST_CASE("golden assignment and hello frames") {
    CHECK(encode_assignment(Assignment{7, dyadic_model()}) == from_hex(fixture("golden_assignment.hex")));
    CHECK(encode_hello(Hello{kVersion, 3}) == from_hex(fixture("golden_hello.hex")));

    const auto decoded = decode_assignment(from_hex(fixture("golden_assignment.hex")));
    REQUIRE(decoded.ok());
    CHECK(decoded.value() == Assignment{7, dyadic_model()});
}

TEST_CASE("round trips over random messages") {
    Rng rng(31337);
    for (int i = 0; i < 2000; ++i) {
        FlatWeights flat{};
        for (double& v : flat) {
            v = std::bit_cast<double>(rng.next_u64());
            if (!std::isfinite(v)) {
                v = rng.uniform();
            }
        }
        const ModelWeights model = unflatten(flat);
        const auto round = static_cast<std::uint32_t>(rng.next_u64());
        Message m;
        switch (rng.below(6)) {
        case 0: m = Hello{static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint32_t>(rng.next_u64())}; break;
        case 1: m = Assignment{round, model}; break;
        case 2:
            m = Update{round, static_cast<std::uint32_t>(rng.next_u64()), model,
                       static_cast<std::uint32_t>(1 + rng.below(0xFFFFFFFEu))};
            break;
        case 3: m = Shutdown{}; break;
        case 4: m = Ack{}; break;
        default: m = ErrorFrame{static_cast<std::uint8_t>(rng.below(256))}; break;
        }
        const Bytes frame = encode(m);
        const auto decoded = decode_frame(frame);
        REQUIRE(decoded.ok());
        CHECK(encode(decoded.value()) == frame);
        CHECK(decoded.value() == m);
    }
}

TEST_CASE("decoder errors name the offset") {
    SUBCASE("unknown type byte") {
        const Bytes frame{0, 0, 0, 1, 0x09};
        const auto r = decode_frame(frame);
        REQUIRE_FALSE(r.ok());
        CHECK(r.error().offset == 4);
    }
    SUBCASE("truncated weights") {
        Bytes frame = encode_assignment(Assignment{1, dyadic_model()});
        frame.resize(frame.size() - 3);
        frame[3] = static_cast<std::uint8_t>(frame.size() - 4);
        const auto r = decode_frame(frame);
        REQUIRE_FALSE(r.ok());
        CHECK(r.error().offset == 4 + 1 + 4 + 16 * 8);
    }
    SUBCASE("length prefix disagrees with the buffer") {
        Bytes frame = encode_shutdown();
        frame.push_back(0);
        CHECK_FALSE(decode_frame(frame).ok());
    }
    SUBCASE("trailing bytes inside the payload") {
        const Bytes frame{0, 0, 0, 2, 0x03, 0x00};
        const auto r = decode_frame(frame);
        REQUIRE_FALSE(r.ok());
        CHECK(r.error().offset == 5);
    }
    SUBCASE("oversized declared length") {
        const Bytes frame{0, 0, 0x10, 0x01, 0x03};
        CHECK_FALSE(decode_frame(frame).ok());
    }
    SUBCASE("zero sample count") {
        Bytes frame = encode_update(Update{1, 1, ModelWeights{}, 1});
        frame[16] = 0;
        const auto r = decode_frame(frame);
        REQUIRE_FALSE(r.ok());
        CHECK(r.error().offset == 13);
    }
    SUBCASE("typed decoders reject other message types") {
        CHECK_FALSE(decode_update(encode_shutdown()).ok());
        CHECK_FALSE(decode_assignment(encode_hello(Hello{})).ok());
    }
}

TEST_CASE("decoder is total on arbitrary bytes") {
    Rng rng(4242);
    for (int i = 0; i < 20000; ++i) {
        Bytes junk(rng.below(200));
        for (auto& b : junk) {
            b = static_cast<std::uint8_t>(rng.next_u64());
        }
        if (junk.size() >= 4 && rng.below(2) == 0) {
            const auto len = static_cast<std::uint32_t>(junk.size() - 4);
            junk[0] = 0;
            junk[1] = 0;
            junk[2] = static_cast<std::uint8_t>(len >> 8);
            junk[3] = static_cast<std::uint8_t>(len);
            junk[4 % junk.size()] = static_cast<std::uint8_t>(rng.below(6));
        }
        const auto r = decode_frame(junk);
        if (r.ok()) {
            CHECK(encode(r.value()) == junk);
        }
        (void)decode_payload(junk);
    }
}

TEST_CASE("hex helpers") {
    CHECK(to_hex(Bytes{0x00, 0xAB, 0x7F}) == "00ab7f");
    CHECK(from_hex("00 ab\n7F") == Bytes{0x00, 0xAB, 0x7F});
    CHECK_THROWS(from_hex("0"));
    CHECK_THROWS(from_hex("zz"));
}
