#include "fedlearn/ann.hpp"

#include <cmath>

namespace fedlearn {

namespace {

template <std::size_t N>
std::array<double, N + 1> with_bias(const std::array<double, N>& values) noexcept {
    std::array<double, N + 1> out{};
    for (std::size_t i = 0; i < N; ++i) {
        out[i] = values[i];
    }
    out[N] = 1.0;
    return out;
}

template <std::size_t N>
std::array<double, N> activate(const std::array<double, N>& pre) noexcept {
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        out[i] = sigmoid(pre[i]);
    }
    return out;
}

template <class Weights>
FlatWeights flatten_layers(const Weights& w) noexcept {
    FlatWeights flat{};
    std::size_t i = 0;
    for (const auto& row : w.input) {
        for (double v : row) {
            flat[i++] = v;
        }
    }
    for (const auto& row : w.hidden) {
        for (double v : row) {
            flat[i++] = v;
        }
    }
    return flat;
}

} // namespace

FlatWeights flatten(const ModelWeights& w) noexcept { return flatten_layers(w); }

FlatWeights flatten(const Gradient& g) noexcept { return flatten_layers(g); }

ModelWeights unflatten(const FlatWeights& flat) noexcept {
    ModelWeights w;
    std::size_t i = 0;
    for (auto& row : w.input) {
        for (double& v : row) {
            v = flat[i++];
        }
    }
    for (auto& row : w.hidden) {
        for (double& v : row) {
            v = flat[i++];
        }
    }
    return w;
}

bool all_finite(const ModelWeights& w) noexcept {
    for (double v : flatten(w)) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

OutputDeltas output_error(std::span<const double> outputs, std::span<const double> targets) {
    require(outputs.size() == kOutputs && targets.size() == kOutputs,
            "output_error: outputs and targets must both have one entry per output neuron");
    OutputDeltas deltas{};
    for (std::size_t k = 0; k < kOutputs; ++k) {
        const double o = outputs[k];
        deltas[k] = o * (1.0 - o) * (o - targets[k]);
    }
    return deltas;
}

HiddenDeltas hidden_error(std::span<const double> hidden_outs, std::span<const double> output_deltas,
                          const HiddenLayer& w_hidden) {
    require(hidden_outs.size() == kHidden, "hidden_error: expected one activation per hidden neuron");
    require(output_deltas.size() == kOutputs, "hidden_error: expected one delta per output neuron");
    HiddenDeltas deltas{};
    for (std::size_t h = 0; h < kHidden; ++h) {
        double acc = 0.0;
        for (std::size_t k = 0; k < kOutputs; ++k) {
            acc += output_deltas[k] * w_hidden[k][h];
        }
        const double out = hidden_outs[h];
        deltas[h] = acc * out * (1.0 - out);
    }
    return deltas;
}

Activations forward(const ModelWeights& w, const std::array<double, kInputs>& input) noexcept {
    Activations a;
    a.hidden = activate(forward_layer(input, w.input));
    a.output = activate(forward_layer(a.hidden, w.hidden));
    return a;
}

EpochResult train_epoch(const Sample& sample, const ModelWeights& w, GradientMode mode) {
    const Activations a = forward(w, sample.input);
    const OutputDeltas out_deltas = output_error(a.output, sample.target);

    EpochResult result;
    result.output_deltas = out_deltas;
    result.weights.hidden = backprop_layer(a.hidden, out_deltas, w.hidden);
    const HiddenLayer& propagate_through = mode == GradientMode::PaperFaithful ? result.weights.hidden : w.hidden;
    const HiddenDeltas hid_deltas = hidden_error(a.hidden, out_deltas, propagate_through);
    result.weights.input = backprop_layer(sample.input, hid_deltas, w.input);
    return result;
}

Gradient gradient(const ModelWeights& w, const Sample& sample) noexcept {
    const Activations a = forward(w, sample.input);
    const OutputDeltas out_deltas = output_error(a.output, sample.target);
    const HiddenDeltas hid_deltas = hidden_error(a.hidden, out_deltas, w.hidden);

    Gradient g;
    const auto hidden_in = with_bias(a.hidden);
    for (std::size_t k = 0; k < kOutputs; ++k) {
        for (std::size_t c = 0; c < hidden_in.size(); ++c) {
            g.hidden[k][c] = out_deltas[k] * hidden_in[c];
        }
    }
    const auto input_in = with_bias(sample.input);
    for (std::size_t h = 0; h < kHidden; ++h) {
        for (std::size_t c = 0; c < input_in.size(); ++c) {
            g.input[h][c] = hid_deltas[h] * input_in[c];
        }
    }
    return g;
}

double sample_loss(const ModelWeights& w, const Sample& sample) noexcept {
    const Activations a = forward(w, sample.input);
    double acc = 0.0;
    for (std::size_t k = 0; k < kOutputs; ++k) {
        const double d = a.output[k] - sample.target[k];
        acc += d * d;
    }
    return 0.5 * acc;
}

BatchResult train_batch(std::span<const Sample> samples, const ModelWeights& w, GradientMode mode) {
    BatchResult result;
    result.weights = w;
    result.errors.reserve(samples.size());
    for (const Sample& s : samples) {
        EpochResult epoch = train_epoch(s, result.weights, mode);
        result.errors.push_back(epoch.output_deltas);
        result.weights = epoch.weights;
    }
    return result;
}

double mse(const ModelWeights& w, std::span<const Sample> samples) {
    require(!samples.empty(), "mse: sample set must not be empty");
    double acc = 0.0;
    for (const Sample& s : samples) {
        const Activations a = forward(w, s.input);
        for (std::size_t k = 0; k < kOutputs; ++k) {
            const double d = a.output[k] - s.target[k];
            acc += d * d;
        }
    }
    return acc / static_cast<double>(samples.size() * kOutputs);
}

} // namespace fedlearn
