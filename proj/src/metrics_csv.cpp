#include "fedlearn/metrics_csv.hpp"

#include <cinttypes>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fedlearn {

namespace {

constexpr const char* kHeader = "round,elapsed_s,epochs,mse";

} // namespace

MetricsCsvWriter::MetricsCsvWriter(std::ostream& out) : out_(out) {
    out_ << kHeader << '\n';
    out_.flush();
}

void MetricsCsvWriter::write(const RoundMetrics& m) {
    char line[160];
    std::snprintf(line, sizeof line, "%" PRIu32 ",%.9g,%" PRIu64 ",%.9g\n", m.round, m.elapsed_s, m.epochs, m.mse);
    out_ << line;
    out_.flush();
    if (!out_) {
        throw std::runtime_error("metrics output failed");
    }
}

std::vector<RoundMetrics> read_metrics_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kHeader) {
        throw std::runtime_error("metrics csv: missing header '" + std::string(kHeader) + "'");
    }
    std::vector<RoundMetrics> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        RoundMetrics m;
        char tail = 0;
        if (std::sscanf(line.c_str(), "%" SCNu32 ",%lf,%" SCNu64 ",%lf%c", &m.round, &m.elapsed_s, &m.epochs, &m.mse,
                        &tail) != 4) {
            throw std::runtime_error("metrics csv line " + std::to_string(line_no) + ": cannot parse '" + line + "'");
        }
        out.push_back(m);
    }
    return out;
}

} // namespace fedlearn
