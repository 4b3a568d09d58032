#include "fedlearn/rng.hpp"

#include "fedlearn/contract.hpp"

namespace fedlearn {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
}

} // namespace

std::uint64_t SplitMix64::next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) noexcept {
    SplitMix64 expander(seed);
    for (auto& word : s_) {
        word = expander.next();
    }
}

std::uint64_t Rng::next_u64() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t bound) {
    require(bound > 0, "Rng::below: bound must be positive");
    // Reject the low residue class so every value in [0, bound) is equally likely.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) {
            return r % bound;
        }
    }
}

std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t slot) noexcept {
    SplitMix64 sm(run_seed);
    std::uint64_t out = sm.next();
    for (std::uint64_t i = 0; i < slot; ++i) {
        out = sm.next();
    }
    return out;
}

std::uint64_t server_seed(std::uint64_t run_seed) noexcept { return derive_seed(run_seed, 0); }

std::uint64_t evaluation_seed(std::uint64_t run_seed) noexcept { return derive_seed(run_seed, 1); }

std::uint64_t client_seed(std::uint64_t run_seed, std::uint32_t client_id) noexcept {
    return derive_seed(run_seed, 2 + static_cast<std::uint64_t>(client_id));
}

} // namespace fedlearn
