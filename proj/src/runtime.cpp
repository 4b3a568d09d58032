#include "fedlearn/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <thread>

#include "fedlearn/contract.hpp"
#include "fedlearn/fedsgd.hpp"
#include "fedlearn/mailbox.hpp"

namespace fedlearn {

const char* to_string(GradientMode mode) noexcept {
    return mode == GradientMode::Classic ? "classic" : "post-update";
}

const char* to_string(LocalTraining training) noexcept {
    return training == LocalTraining::Sequential ? "sequential" : "full-batch";
}

void ExperimentConfig::validate() const {
    require(n_clients >= 1, "n_clients must be at least 1");
    require(subset() >= 1 && subset() <= n_clients, "subset size must lie in [1, n_clients]");
    require(client.samples_per_round >= 1, "samples_per_round must be at least 1");
    require(client.local_epochs >= 1, "local_epochs must be at least 1");
    require(std::isfinite(client.eta) && client.eta > 0.0 && client.eta <= 1.0, "eta must lie in (0, 1]");
    require(client.local_training == LocalTraining::FullBatch || client.eta == 1.0,
            "sequential local training runs at eta = 1; other rates need full-batch local training");
    require(eval_samples >= 1, "eval_samples must be at least 1");
    if (const auto* d = std::get_if<StopAfterDuration>(&stop)) {
        require(std::isfinite(d->seconds) && d->seconds >= 0.0, "duration must be a non-negative number of seconds");
    }
    if (mode == Mode::Distributed) {
        require(!listen_address.empty(), "distributed mode needs a listen address");
    }
}

Update client_step(const Assignment& assignment, std::uint32_t client_id, Rng& rng, const ClientSettings& settings) {
    require(settings.samples_per_round >= 1, "client_step: samples_per_round must be at least 1");
    const std::vector<Sample> samples = gen_batch(rng, settings.samples_per_round);

    ModelWeights model = assignment.model;
    for (std::uint32_t e = 0; e < settings.local_epochs; ++e) {
        if (settings.local_training == LocalTraining::Sequential) {
            model = train_batch(samples, model, settings.gradient_mode).weights;
        } else {
            model = local_gradient_step(model, Partition(samples), LearningRate(settings.eta));
        }
    }
    return Update{assignment.round, client_id, model, settings.samples_per_round};
}

std::string expand_worker_command(const std::string& command_template, const std::string& address,
                                  std::uint32_t client_id, std::uint64_t client_seed, const ClientSettings& settings) {
    char eta[32];
    std::snprintf(eta, sizeof eta, "%.17g", settings.eta);
    const std::pair<std::string, std::string> substitutions[] = {
        {"{addr}", address},
        {"{id}", std::to_string(client_id)},
        {"{seed}", std::to_string(client_seed)},
        {"{samples}", std::to_string(settings.samples_per_round)},
        {"{gradient_mode}", to_string(settings.gradient_mode)},
        {"{local_epochs}", std::to_string(settings.local_epochs)},
        {"{local_training}", to_string(settings.local_training)},
        {"{eta}", eta},
    };
    std::string out;
    std::size_t i = 0;
    while (i < command_template.size()) {
        bool replaced = false;
        if (command_template[i] == '{') {
            for (const auto& [key, value] : substitutions) {
                if (command_template.compare(i, key.size(), key) == 0) {
                    out += value;
                    i += key.size();
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) {
            out += command_template[i++];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// In-process pool

namespace {

struct StopClient {};
using ClientMessage = std::variant<Assignment, StopClient>;
using ServerMessage = std::variant<Update, std::exception_ptr>;

} // namespace

struct InProcessPool::Impl {
    struct Client {
        Mailbox<ClientMessage> mailbox;
        std::thread thread;
    };

    std::vector<std::unique_ptr<Client>> clients;
    Mailbox<ServerMessage> server;
    bool stopped = false;
};

InProcessPool::InProcessPool(std::uint32_t n_clients, std::uint64_t run_seed, ClientSettings settings)
    : impl_(std::make_unique<Impl>()) {
    require(n_clients >= 1, "InProcessPool: need at least one client");
    impl_->clients.reserve(n_clients);
    for (std::uint32_t id = 0; id < n_clients; ++id) {
        auto client = std::make_unique<Impl::Client>();
        Mailbox<ClientMessage>* inbox = &client->mailbox;
        Mailbox<ServerMessage>* server = &impl_->server;
        client->thread = std::thread([inbox, server, id, settings, seed = client_seed(run_seed, id)] {
            Rng rng(seed);
            for (;;) {
                ClientMessage message = inbox->receive();
                if (std::holds_alternative<StopClient>(message)) {
                    return;
                }
                try {
                    server->send(client_step(std::get<Assignment>(message), id, rng, settings));
                } catch (...) {
                    server->send(std::current_exception());
                }
            }
        });
        impl_->clients.push_back(std::move(client));
    }
}

InProcessPool::~InProcessPool() { shutdown(); }

std::uint32_t InProcessPool::size() const { return static_cast<std::uint32_t>(impl_->clients.size()); }

void InProcessPool::dispatch(std::uint32_t client_id, const Assignment& assignment) {
    require(client_id < impl_->clients.size(), "dispatch: unknown client id");
    impl_->clients[client_id]->mailbox.send(assignment);
}

Update InProcessPool::collect() {
    ServerMessage message = impl_->server.receive();
    if (auto* failure = std::get_if<std::exception_ptr>(&message)) {
        std::rethrow_exception(*failure);
    }
    return std::get<Update>(std::move(message));
}

void InProcessPool::shutdown() {
    if (impl_->stopped) {
        return;
    }
    impl_->stopped = true;
    for (auto& client : impl_->clients) {
        client->mailbox.send(StopClient{});
    }
    for (auto& client : impl_->clients) {
        if (client->thread.joinable()) {
            client->thread.join();
        }
    }
}

// ---------------------------------------------------------------------------
// Server

RoundOutcome server_round(const ModelWeights& model, std::uint32_t round, ClientPool& clients, std::size_t k,
                          Rng& rng) {
    std::vector<std::uint32_t> ids(clients.size());
    for (std::uint32_t i = 0; i < ids.size(); ++i) {
        ids[i] = i;
    }
    const std::vector<std::uint32_t> subset = select_subset(ids, k, rng);

    const Assignment assignment{round, model};
    for (std::uint32_t id : subset) {
        clients.dispatch(id, assignment);
    }

    std::vector<bool> pending(clients.size(), false);
    for (std::uint32_t id : subset) {
        pending[id] = true;
    }

    RoundOutcome outcome;
    outcome.updates.reserve(subset.size());
    for (std::size_t received = 0; received < subset.size(); ++received) {
        Update u = clients.collect();
        if (u.round != round) {
            throw ProtocolError("round " + std::to_string(round) + ": update from client " +
                                std::to_string(u.client_id) + " is stamped with round " + std::to_string(u.round));
        }
        if (u.client_id >= pending.size() || !pending[u.client_id]) {
            throw ProtocolError("round " + std::to_string(round) + ": unexpected update from client " +
                                std::to_string(u.client_id));
        }
        if (u.sample_count == 0) {
            throw ProtocolError("round " + std::to_string(round) + ": client " + std::to_string(u.client_id) +
                                " reported zero samples");
        }
        pending[u.client_id] = false;
        outcome.updates.push_back(std::move(u));
    }

    // Arrival order is nondeterministic; summing in client-id order keeps the
    // floating-point result reproducible.
    std::sort(outcome.updates.begin(), outcome.updates.end(),
              [](const Update& a, const Update& b) { return a.client_id < b.client_id; });
    std::vector<ClientUpdate> weighted;
    weighted.reserve(outcome.updates.size());
    for (const Update& u : outcome.updates) {
        weighted.push_back(ClientUpdate{u.model, u.sample_count});
    }
    outcome.model = aggregate(weighted);
    return outcome;
}

RunResult run_with_pool(const ExperimentConfig& config, ClientPool& pool, const MetricsSink& on_round) {
    config.validate();
    require(pool.size() == config.n_clients, "run: pool size does not match n_clients");

    Rng eval_rng(evaluation_seed(config.seed));
    const std::vector<Sample> eval_batch = gen_batch(eval_rng, config.eval_samples);
    Rng server_rng(server_seed(config.seed));

    RunResult result;
    result.final_model = initial_weights(config.initial);

    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    const auto elapsed = [&start] { return std::chrono::duration<double>(Clock::now() - start).count(); };
    // A duration run stops after the first round whose recorded time reaches
    // the limit, so the last CSV row is never short of it.
    const auto keep_going = [&](std::uint32_t round) {
        if (const auto* r = std::get_if<StopAfterRounds>(&config.stop)) {
            return round < r->rounds;
        }
        const double limit = std::get<StopAfterDuration>(config.stop).seconds;
        return result.metrics.empty() ? limit > 0.0 : result.metrics.back().elapsed_s < limit;
    };

    std::uint64_t epochs = 0;
    for (std::uint32_t round = 0; keep_going(round); ++round) {
        RoundOutcome outcome = server_round(result.final_model, round, pool, config.subset(), server_rng);
        result.final_model = outcome.model;
        epochs += config.client.local_epochs;

        RoundMetrics m;
        m.round = round;
        m.elapsed_s = elapsed();
        m.epochs = epochs;
        m.mse = mse(result.final_model, eval_batch);
        result.metrics.push_back(m);
        if (on_round) {
            on_round(m);
        }
    }
    pool.shutdown();
    return result;
}

RunResult run(const ExperimentConfig& config, const MetricsSink& on_round) {
    config.validate();
    if (config.mode == Mode::Concurrent) {
        InProcessPool pool(config.n_clients, config.seed, config.client);
        return run_with_pool(config, pool, on_round);
    }
    SocketPool pool(config.n_clients, config.listen_address);
    if (config.worker_command) {
        pool.spawn_workers(*config.worker_command, config.seed, config.client);
    }
    pool.await_workers(config.handshake_timeout);
    return run_with_pool(config, pool, on_round);
}

} // namespace fedlearn
