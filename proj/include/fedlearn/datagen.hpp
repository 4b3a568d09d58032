#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

#include "fedlearn/ann.hpp"
#include "fedlearn/rng.hpp"

namespace fedlearn {

inline constexpr std::size_t kDefaultSamplesPerRound = 250;

/// Sample for input (x, y) with target (sqrt(xy), sqrt(sqrt(xy))).
/// The fourth root is taken as two square roots so it is correctly rounded
/// and reproducible in any language.
Sample make_sample(double x, double y) noexcept;

/// Draws x then y from rng.uniform().
Sample gen_sample(Rng& rng) noexcept;

std::vector<Sample> gen_batch(Rng& rng, std::size_t n = kDefaultSamplesPerRound);

struct FixedWeights {};
struct SeededWeights {
    std::uint64_t seed = 0;
};
using WeightInit = std::variant<FixedWeights, SeededWeights>;

/// The repository's constant starting point: -0.40, -0.35, ..., 0.40 in
/// canonical weight order. Chosen for this project, not taken from any
/// published run.
ModelWeights fixed_initial_weights() noexcept;

/// Fixed -> fixed_initial_weights(); Seeded -> 17 draws in (-0.5, 0.5) in
/// canonical order.
ModelWeights initial_weights(const WeightInit& init);

// CSV dataset dump: one `x,y,t1,t2` line per sample, 17 significant digits.
void write_samples_csv(std::ostream& out, std::span<const Sample> samples);
std::vector<Sample> read_samples_csv(std::istream& in);

} // namespace fedlearn
