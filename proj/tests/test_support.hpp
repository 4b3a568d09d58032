#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fedlearn/ann.hpp"
#include "fedlearn/rng.hpp"
#include "oracles/list_reference.hpp"

namespace testing_support {

inline fedlearn::ModelWeights random_weights(fedlearn::Rng& rng, double half_width) {
    fedlearn::FlatWeights flat{};
    for (double& v : flat) {
        v = (2.0 * rng.uniform() - 1.0) * half_width;
    }
    return fedlearn::unflatten(flat);
}

inline fedlearn::Sample random_sample(fedlearn::Rng& rng) {
    return fedlearn::Sample{{rng.uniform(), rng.uniform()}, {rng.uniform(), rng.uniform()}};
}

inline oracle::Weights to_oracle(const fedlearn::ModelWeights& w) {
    oracle::Weights o;
    for (const auto& row : w.input) {
        o.w_input.emplace_back(row.begin(), row.end());
    }
    for (const auto& row : w.hidden) {
        o.w_hidden.emplace_back(row.begin(), row.end());
    }
    return o;
}

inline bool bit_equal(double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

/// Compares every weight bit-for-bit against the oracle's nested lists.
inline bool same_bits(const fedlearn::ModelWeights& w, const oracle::Weights& o) {
    if (o.w_input.size() != w.input.size() || o.w_hidden.size() != w.hidden.size()) {
        return false;
    }
    for (std::size_t r = 0; r < w.input.size(); ++r) {
        if (o.w_input[r].size() != w.input[r].size()) return false;
        for (std::size_t c = 0; c < w.input[r].size(); ++c) {
            if (!bit_equal(w.input[r][c], o.w_input[r][c])) return false;
        }
    }
    for (std::size_t r = 0; r < w.hidden.size(); ++r) {
        if (o.w_hidden[r].size() != w.hidden[r].size()) return false;
        for (std::size_t c = 0; c < w.hidden[r].size(); ++c) {
            if (!bit_equal(w.hidden[r][c], o.w_hidden[r][c])) return false;
        }
    }
    return true;
}

inline bool same_bits(const fedlearn::ModelWeights& a, const fedlearn::ModelWeights& b) {
    const auto fa = fedlearn::flatten(a);
    const auto fb = fedlearn::flatten(b);
    for (std::size_t i = 0; i < fa.size(); ++i) {
        if (!bit_equal(fa[i], fb[i])) return false;
    }
    return true;
}

inline double relative_error(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace testing_support
