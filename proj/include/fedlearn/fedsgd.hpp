#pragma once

// Federated SGD: client-side full-batch steps, sample-count-weighted
// server aggregation, client subset selection, and the centralized step the
// federated round is algebraically equal to.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedlearn/ann.hpp"
#include "fedlearn/rng.hpp"

namespace fedlearn {

/// Step size in [0, 1]. Zero is accepted and makes every step a no-op.
class LearningRate {
public:
    explicit LearningRate(double eta = 1.0);

    double value() const noexcept { return eta_; }

private:
    double eta_;
};

/// One client's local dataset. Never empty.
class Partition {
public:
    explicit Partition(std::vector<Sample> samples);

    std::span<const Sample> samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }

private:
    std::vector<Sample> samples_;
};

struct ClientUpdate {
    ModelWeights weights;
    std::uint64_t sample_count = 0;
};

/// w - (eta / |P|) * sum_i gradient(w, s_i). Every gradient is taken at the
/// incoming w (one full-batch step, unlike train_batch).
ModelWeights local_gradient_step(const ModelWeights& w, const Partition& partition, LearningRate eta);

/// (1/n) * sum_j count_j * w_j with n = sum_j count_j, summed in the order
/// given.
ModelWeights aggregate(std::span<const ClientUpdate> updates);

/// w - (eta / n) * sum over all samples of gradient(w, s).
ModelWeights central_step(const ModelWeights& w, std::span<const Sample> samples, LearningRate eta);

/// Uniform k-subset without replacement (partial Fisher-Yates driven by
/// Rng::below). The result order is deterministic for a given rng state.
std::vector<std::uint32_t> select_subset(std::span<const std::uint32_t> client_ids, std::size_t k, Rng& rng);

} // namespace fedlearn
