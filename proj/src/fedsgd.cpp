#include "fedlearn/fedsgd.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace fedlearn {

namespace {

FlatWeights gradient_sum(const ModelWeights& w, std::span<const Sample> samples) {
    FlatWeights sum{};
    for (const Sample& s : samples) {
        const FlatWeights g = flatten(gradient(w, s));
        for (std::size_t i = 0; i < kWeightCount; ++i) {
            sum[i] += g[i];
        }
    }
    return sum;
}

ModelWeights descend(const ModelWeights& w, const FlatWeights& grad_sum, double eta, std::size_t count) {
    const double scale = eta / static_cast<double>(count);
    FlatWeights flat = flatten(w);
    for (std::size_t i = 0; i < kWeightCount; ++i) {
        flat[i] = flat[i] - scale * grad_sum[i];
    }
    return unflatten(flat);
}

} // namespace

LearningRate::LearningRate(double eta) : eta_(eta) {
    require(std::isfinite(eta) && eta >= 0.0 && eta <= 1.0,
            "LearningRate: eta must lie in [0, 1], got " + std::to_string(eta));
}

Partition::Partition(std::vector<Sample> samples) : samples_(std::move(samples)) {
    require(!samples_.empty(), "Partition: a partition must hold at least one sample");
}

ModelWeights local_gradient_step(const ModelWeights& w, const Partition& partition, LearningRate eta) {
    return descend(w, gradient_sum(w, partition.samples()), eta.value(), partition.size());
}

ModelWeights aggregate(std::span<const ClientUpdate> updates) {
    require(!updates.empty(), "aggregate: need at least one update");
    std::uint64_t total = 0;
    for (const ClientUpdate& u : updates) {
        require(u.sample_count >= 1, "aggregate: every update must carry at least one sample");
        total += u.sample_count;
    }

    FlatWeights acc{};
    FlatWeights lo = flatten(updates.front().weights);
    FlatWeights hi = lo;
    for (const ClientUpdate& u : updates) {
        const FlatWeights flat = flatten(u.weights);
        const double count = static_cast<double>(u.sample_count);
        for (std::size_t i = 0; i < kWeightCount; ++i) {
            acc[i] += count * flat[i];
            lo[i] = std::min(lo[i], flat[i]);
            hi[i] = std::max(hi[i], flat[i]);
        }
    }
    // The exact weighted mean lies in [lo, hi]; clamping only removes
    // rounding excursions past the hull.
    const double n = static_cast<double>(total);
    for (std::size_t i = 0; i < kWeightCount; ++i) {
        acc[i] = std::clamp(acc[i] / n, lo[i], hi[i]);
    }
    return unflatten(acc);
}

ModelWeights central_step(const ModelWeights& w, std::span<const Sample> samples, LearningRate eta) {
    require(!samples.empty(), "central_step: sample set must not be empty");
    return descend(w, gradient_sum(w, samples), eta.value(), samples.size());
}

std::vector<std::uint32_t> select_subset(std::span<const std::uint32_t> client_ids, std::size_t k, Rng& rng) {
    require(k <= client_ids.size(), "select_subset: k exceeds the number of clients");
    std::vector<std::uint32_t> pool(client_ids.begin(), client_ids.end());
    const std::size_t n = pool.size();
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

} // namespace fedlearn
