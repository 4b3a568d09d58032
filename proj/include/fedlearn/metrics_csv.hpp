#pragma once

#include <iosfwd>
#include <vector>

#include "fedlearn/runtime.hpp"

namespace fedlearn {

/// Writes `round,elapsed_s,epochs,mse`, one flushed line per round. Reals
/// use 9 significant digits.
class MetricsCsvWriter {
public:
    explicit MetricsCsvWriter(std::ostream& out);

    void write(const RoundMetrics& m);

private:
    std::ostream& out_;
};

/// Parses what MetricsCsvWriter wrote. Throws std::runtime_error on a bad
/// header or row.
std::vector<RoundMetrics> read_metrics_csv(std::istream& in);

} // namespace fedlearn
