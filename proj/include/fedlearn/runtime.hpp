#pragma once

// The round engine. A single server activity owns the global model, picks a
// subset of clients, sends each an Assignment, blocks until exactly that many
// Updates arrive, aggregates, and repeats. Clients own their RNG and data and
// talk to the server only through messages: in-process mailboxes in
// concurrent mode, TCP frames in distributed mode.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fedlearn/ann.hpp"
#include "fedlearn/datagen.hpp"
#include "fedlearn/messages.hpp"
#include "fedlearn/rng.hpp"

namespace fedlearn {

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class LocalTraining {
    Sequential, // train_batch over the fresh samples, local_epochs times (eta fixed at 1)
    FullBatch,  // local_gradient_step over the fresh samples, local_epochs times
};

struct ClientSettings {
    std::uint32_t samples_per_round = kDefaultSamplesPerRound;
    std::uint32_t local_epochs = 1;
    GradientMode gradient_mode = GradientMode::PaperFaithful;
    LocalTraining local_training = LocalTraining::Sequential;
    double eta = 1.0;
};

enum class Mode { Concurrent, Distributed };

struct StopAfterRounds {
    std::uint32_t rounds = 0;
};
struct StopAfterDuration {
    double seconds = 500.0;
};
using StopCondition = std::variant<StopAfterRounds, StopAfterDuration>;

struct ExperimentConfig {
    std::uint32_t n_clients = 10;
    std::optional<std::uint32_t> subset_size; // unset: every client, every round
    ClientSettings client;
    Mode mode = Mode::Concurrent;
    StopCondition stop = StopAfterDuration{};
    std::uint64_t seed = 42;
    std::string listen_address;                // distributed only
    std::optional<std::string> worker_command; // distributed only; unset: wait for external workers
    WeightInit initial = FixedWeights{};
    std::size_t eval_samples = 1000;
    std::chrono::milliseconds handshake_timeout{10'000};

    std::uint32_t subset() const noexcept { return subset_size.value_or(n_clients); }

    /// Throws ContractViolation naming the first broken constraint.
    void validate() const;
};

struct RoundMetrics {
    std::uint32_t round = 0;
    double elapsed_s = 0.0;  // since the first round started
    std::uint64_t epochs = 0; // cumulative local batch passes per participating client
    double mse = 0.0;        // global model on the run's evaluation batch

    friend bool operator==(const RoundMetrics&, const RoundMetrics&) = default;
};

/// Generates samples_per_round fresh samples from `rng` and trains the
/// assigned model on them.
Update client_step(const Assignment& assignment, std::uint32_t client_id, Rng& rng, const ClientSettings& settings);

/// Where the server's messages go. Implementations must deliver every
/// dispatched assignment and eventually yield one update per assignment.
class ClientPool {
public:
    virtual ~ClientPool() = default;

    virtual std::uint32_t size() const = 0;
    virtual void dispatch(std::uint32_t client_id, const Assignment& assignment) = 0;
    /// Blocks until some outstanding client replies.
    virtual Update collect() = 0;
    virtual void shutdown() = 0;
};

/// Clients as threads with private mailboxes. Client j seeds its RNG with
/// client_seed(run_seed, j).
class InProcessPool final : public ClientPool {
public:
    InProcessPool(std::uint32_t n_clients, std::uint64_t run_seed, ClientSettings settings);
    ~InProcessPool() override;

    std::uint32_t size() const override;
    void dispatch(std::uint32_t client_id, const Assignment& assignment) override;
    Update collect() override;
    void shutdown() override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Clients as worker processes (or any peers) connected over TCP.
class SocketPool final : public ClientPool {
public:
    /// Binds `listen_address` ("host:port", port 0 for ephemeral).
    SocketPool(std::uint32_t n_clients, const std::string& listen_address);
    ~SocketPool() override;

    /// The bound address as "host:port".
    std::string address() const;

    /// Starts one `/bin/sh -c` process per client from `command_template`.
    /// Placeholders: {addr} {id} {seed} {samples} {gradient_mode}
    /// {local_epochs} {local_training} {eta}.
    void spawn_workers(const std::string& command_template, std::uint64_t run_seed, const ClientSettings& settings);

    /// Accepts connections until every client id 0..n-1 has completed the
    /// HELLO/ACK handshake. Throws net::TransportError on timeout.
    void await_workers(std::chrono::milliseconds timeout);

    std::uint32_t size() const override;
    void dispatch(std::uint32_t client_id, const Assignment& assignment) override;
    Update collect() override;
    void shutdown() override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::string expand_worker_command(const std::string& command_template, const std::string& address,
                                  std::uint32_t client_id, std::uint64_t client_seed, const ClientSettings& settings);

struct RoundOutcome {
    ModelWeights model;
    std::vector<Update> updates; // sorted by client id
};

/// One round: select k clients, dispatch, collect exactly k updates,
/// aggregate in client-id order. Throws ProtocolError on a stale round,
/// unknown or duplicate client, or empty sample count.
RoundOutcome server_round(const ModelWeights& model, std::uint32_t round, ClientPool& clients, std::size_t k, Rng& rng);

struct RunResult {
    std::vector<RoundMetrics> metrics;
    ModelWeights final_model;
};

using MetricsSink = std::function<void(const RoundMetrics&)>;

RunResult run(const ExperimentConfig& config, const MetricsSink& on_round = {});

/// Runs `config` against an already prepared pool.
RunResult run_with_pool(const ExperimentConfig& config, ClientPool& pool, const MetricsSink& on_round = {});

// Worker side of the wire protocol.
struct WorkerOptions {
    std::string server_address;
    std::uint32_t client_id = 0;
    std::uint64_t seed = 0;
    ClientSettings settings;
};

/// Connects, handshakes and serves assignments until SHUTDOWN (returns 0).
/// Any transport or protocol failure is reported on `diagnostics` and yields
/// a nonzero status.
int run_worker(const WorkerOptions& options, std::ostream& diagnostics);

const char* to_string(GradientMode mode) noexcept;
const char* to_string(LocalTraining training) noexcept;

} // namespace fedlearn
