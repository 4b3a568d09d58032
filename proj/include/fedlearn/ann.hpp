#pragma once

// Purely functional 2-3-2 feedforward network with sigmoid activations and
// one bias weight per non-input neuron. Every function takes values and
// returns values; nothing here holds state.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "fedlearn/contract.hpp"

namespace fedlearn {

inline constexpr std::size_t kInputs = 2;
inline constexpr std::size_t kHidden = 3;
inline constexpr std::size_t kOutputs = 2;
inline constexpr std::size_t kWeightCount = kHidden * (kInputs + 1) + kOutputs * (kHidden + 1);

/// Row r holds the incoming weights of destination neuron r; the last column
/// is the bias weight, fed by a constant input of 1.0.
template <std::size_t Rows, std::size_t Cols>
using Layer = std::array<std::array<double, Cols>, Rows>;

using InputLayer = Layer<kHidden, kInputs + 1>;
using HiddenLayer = Layer<kOutputs, kHidden + 1>;

using FlatWeights = std::array<double, kWeightCount>;

struct ModelWeights {
    InputLayer input{};   // input -> hidden
    HiddenLayer hidden{}; // hidden -> output

    friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

/// dE/dw for E = 1/2 * sum_k (o_k - t_k)^2, laid out like ModelWeights.
struct Gradient {
    InputLayer input{};
    HiddenLayer hidden{};

    friend bool operator==(const Gradient&, const Gradient&) = default;
};

struct Sample {
    std::array<double, kInputs> input{};
    std::array<double, kOutputs> target{};

    friend bool operator==(const Sample&, const Sample&) = default;
};

enum class GradientMode {
    Classic,       // hidden deltas use the output layer weights before the update
    PaperFaithful, // hidden deltas use the already-updated output layer weights
};

using OutputDeltas = std::array<double, kOutputs>;
using HiddenDeltas = std::array<double, kHidden>;

// Canonical order: input rows 0..2 as [in0, in1, bias], then hidden rows
// 0..1 as [h0, h1, h2, bias]. The wire format uses the same order.
FlatWeights flatten(const ModelWeights& w) noexcept;
FlatWeights flatten(const Gradient& g) noexcept;
ModelWeights unflatten(const FlatWeights& flat) noexcept;

bool all_finite(const ModelWeights& w) noexcept;

double sigmoid(double x) noexcept;

/// Pre-activations of the layer: dot(activations, row[0..n-1]) + 1.0 * row[n].
template <std::size_t Rows, std::size_t Cols>
std::array<double, Rows> forward_layer(std::span<const double> activations, const Layer<Rows, Cols>& layer) {
    require(activations.size() + 1 == Cols, "forward_layer: activations do not match layer columns");
    std::array<double, Rows> out{};
    for (std::size_t r = 0; r < Rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c + 1 < Cols; ++c) {
            acc += activations[c] * layer[r][c];
        }
        acc += 1.0 * layer[r][Cols - 1];
        out[r] = acc;
    }
    return out;
}

/// row_r' = row_r - delta_r * [inputs, 1.0]. Learning rate is fixed at 1.
template <std::size_t Rows, std::size_t Cols>
Layer<Rows, Cols> backprop_layer(std::span<const double> inputs, std::span<const double> deltas,
                                 const Layer<Rows, Cols>& layer) {
    require(inputs.size() + 1 == Cols, "backprop_layer: inputs do not match layer columns");
    require(deltas.size() == Rows, "backprop_layer: deltas do not match layer rows");
    Layer<Rows, Cols> out = layer;
    for (std::size_t r = 0; r < Rows; ++r) {
        for (std::size_t c = 0; c + 1 < Cols; ++c) {
            out[r][c] = layer[r][c] - (deltas[r] * inputs[c]);
        }
        out[r][Cols - 1] = layer[r][Cols - 1] - (deltas[r] * 1.0);
    }
    return out;
}

/// delta_k = o_k (1 - o_k) (o_k - t_k).
OutputDeltas output_error(std::span<const double> outputs, std::span<const double> targets);

/// delta_h = (sum_k w_hk * delta_k) * h (1 - h). The bias column of
/// `w_hidden` has no source neuron and is not propagated.
HiddenDeltas hidden_error(std::span<const double> hidden_outs, std::span<const double> output_deltas,
                          const HiddenLayer& w_hidden);

struct Activations {
    std::array<double, kHidden> hidden{};
    std::array<double, kOutputs> output{};
};

Activations forward(const ModelWeights& w, const std::array<double, kInputs>& input) noexcept;

struct EpochResult {
    OutputDeltas output_deltas{};
    ModelWeights weights;
};

/// One forward and one backward pass over a single sample.
EpochResult train_epoch(const Sample& sample, const ModelWeights& w, GradientMode mode);

Gradient gradient(const ModelWeights& w, const Sample& sample) noexcept;

/// Loss whose gradient train_epoch follows: 1/2 * sum_k (o_k - t_k)^2.
double sample_loss(const ModelWeights& w, const Sample& sample) noexcept;

struct BatchResult {
    std::vector<OutputDeltas> errors; // input order
    ModelWeights weights;
};

/// Sequential per-sample training; each epoch starts from the previous
/// epoch's weights.
BatchResult train_batch(std::span<const Sample> samples, const ModelWeights& w, GradientMode mode);

/// Mean squared error over all samples and both outputs.
double mse(const ModelWeights& w, std::span<const Sample> samples);

} // namespace fedlearn
