#pragma once

#include <cstdint>

#include "fedlearn/ann.hpp"

namespace fedlearn {

/// Server -> client: train this model for round `round`.
struct Assignment {
    std::uint32_t round = 0;
    ModelWeights model;

    friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Client -> server: the locally trained model and how many samples it saw.
struct Update {
    std::uint32_t round = 0;
    std::uint32_t client_id = 0;
    ModelWeights model;
    std::uint32_t sample_count = 0;

    friend bool operator==(const Update&, const Update&) = default;
};

} // namespace fedlearn
