#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace fedlearn {

/// SplitMix64. Used only to expand a 64-bit seed into generator state and
/// to derive independent per-activity seeds from a run seed.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept;

private:
    std::uint64_t state_;
};

/// xoshiro256** 1.0, seeded by four consecutive SplitMix64 outputs.
///
/// This is the one generator every component uses, so streams replay
/// bit-for-bit across processes and languages. The algorithm, seeding and
/// the double conversion are normative (see docs/protocol.md).
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept;

    std::uint64_t next_u64() noexcept;

    /// Uniform double in [0, 1): the top 53 bits of next_u64() scaled by 2^-53.
    double uniform() noexcept;

    /// Uniform integer in [0, bound) by rejection; bound must be positive.
    std::uint64_t below(std::uint64_t bound);

    const std::array<std::uint64_t, 4>& state() const noexcept { return s_; }

private:
    std::array<std::uint64_t, 4> s_{};
};

// Seeds derived from one run seed: output number `slot` (0-based) of
// SplitMix64(run_seed). Slot 0 is the server's subset selection, slot 1 the
// evaluation batch, slot 2 + j client j.
std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t slot) noexcept;
std::uint64_t server_seed(std::uint64_t run_seed) noexcept;
std::uint64_t evaluation_seed(std::uint64_t run_seed) noexcept;
std::uint64_t client_seed(std::uint64_t run_seed, std::uint32_t client_id) noexcept;

} // namespace fedlearn
