#include "fedlearn/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fedlearn {

Sample make_sample(double x, double y) noexcept {
    const double z = x * y;
    const double root = std::sqrt(z);
    return Sample{{x, y}, {root, std::sqrt(root)}};
}

Sample gen_sample(Rng& rng) noexcept {
    const double x = rng.uniform();
    const double y = rng.uniform();
    return make_sample(x, y);
}

std::vector<Sample> gen_batch(Rng& rng, std::size_t n) {
    std::vector<Sample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(gen_sample(rng));
    }
    return out;
}

ModelWeights fixed_initial_weights() noexcept {
    return ModelWeights{
        .input = {{{-0.40, -0.35, -0.30},
                   {-0.25, -0.20, -0.15},
                   {-0.10, -0.05, 0.00}}},
        .hidden = {{{0.05, 0.10, 0.15, 0.20},
                    {0.25, 0.30, 0.35, 0.40}}},
    };
}

ModelWeights initial_weights(const WeightInit& init) {
    if (std::holds_alternative<FixedWeights>(init)) {
        return fixed_initial_weights();
    }
    Rng rng(std::get<SeededWeights>(init).seed);
    FlatWeights flat{};
    for (double& v : flat) {
        double u = rng.uniform();
        while (u == 0.0) { // would give exactly -0.5
            u = rng.uniform();
        }
        v = u - 0.5;
    }
    return unflatten(flat);
}

void write_samples_csv(std::ostream& out, std::span<const Sample> samples) {
    char line[128];
    for (const Sample& s : samples) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", s.input[0], s.input[1], s.target[0],
                      s.target[1]);
        out << line;
    }
}

std::vector<Sample> read_samples_csv(std::istream& in) {
    std::vector<Sample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::array<double, 4> fields{};
        std::istringstream row(line);
        std::string cell;
        std::size_t i = 0;
        while (std::getline(row, cell, ',')) {
            if (i == fields.size()) {
                i = fields.size() + 1;
                break;
            }
            std::size_t used = 0;
            try {
                fields[i] = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != cell.size()) {
                throw std::runtime_error("samples csv line " + std::to_string(line_no) + ": bad number '" + cell + "'");
            }
            ++i;
        }
        if (i != fields.size()) {
            throw std::runtime_error("samples csv line " + std::to_string(line_no) + ": expected 4 fields");
        }
        out.push_back(Sample{{fields[0], fields[1]}, {fields[2], fields[3]}});
    }
    return out;
}

} // namespace fedlearn
