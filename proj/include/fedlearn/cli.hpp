#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fedlearn/runtime.hpp"

namespace fedlearn::cli {

/// Bad flags, bad values or contradictory options. `what()` holds the
/// message to print; `help` is set when the user asked for --help.
class UsageError : public std::runtime_error {
public:
    UsageError(const std::string& message, int exit_code, bool help = false)
        : std::runtime_error(message), exit_code_(exit_code), help_(help) {}

    int exit_code() const noexcept { return exit_code_; }
    bool help() const noexcept { return help_; }

private:
    int exit_code_;
    bool help_;
};

struct RunInvocation {
    ExperimentConfig config;
    std::optional<std::string> out_path; // unset: stdout
};

struct WorkerInvocation {
    WorkerOptions options;
};

using Invocation = std::variant<RunInvocation, WorkerInvocation>;

/// argv[0] is the program name.
Invocation parse_args(const std::vector<std::string>& argv);

/// Full driver: parse, run, emit CSV. Returns the process exit status.
int main(const std::vector<std::string>& argv);

} // namespace fedlearn::cli
