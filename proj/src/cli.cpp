#include "fedlearn/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include "fedlearn/datagen.hpp"
#include "fedlearn/metrics_csv.hpp"
#include "fedlearn/net.hpp"

namespace fedlearn::cli {

namespace {

constexpr int kUsageExit = 2;
constexpr int kRuntimeExit = 1;

const std::map<std::string, GradientMode> kGradientModes{{"classic", GradientMode::Classic},
                                                         {"post-update", GradientMode::PaperFaithful}};
const std::map<std::string, LocalTraining> kLocalTraining{{"sequential", LocalTraining::Sequential},
                                                          {"full-batch", LocalTraining::FullBatch}};
const std::map<std::string, Mode> kModes{{"concurrent", Mode::Concurrent}, {"distributed", Mode::Distributed}};

struct GenDataInvocation {
    std::uint64_t seed = 0;
    std::size_t count = kDefaultSamplesPerRound;
    std::optional<std::string> out_path;
};

void add_client_options(CLI::App& app, ClientSettings& s) {
    app.add_option("--samples", s.samples_per_round, "Fresh samples each client trains on per round")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--gradient-mode", s.gradient_mode, "Weights the hidden deltas read: classic (pre-update) or post-update")
        ->transform(CLI::CheckedTransformer(kGradientModes, CLI::ignore_case))
        ->option_text("classic|post-update [post-update]");
    app.add_option("--local-epochs", s.local_epochs, "Local passes over the round's samples")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--local-training", s.local_training, "sequential (per-sample updates) or full-batch")
        ->transform(CLI::CheckedTransformer(kLocalTraining, CLI::ignore_case))
        ->option_text("sequential|full-batch [sequential]");
    app.add_option("--eta", s.eta, "Learning rate in (0, 1]; only full-batch training uses values other than 1")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
}

struct Parsed {
    Invocation invocation;
    std::optional<GenDataInvocation> gen_data;
};

Parsed parse(const std::vector<std::string>& argv) {
    CLI::App app{"Federated SGD simulator: trains a 2-3-2 network across simulated clients and writes "
                 "per-round metrics as CSV."};
    app.name(argv.empty() ? "fedlearn" : argv.front());

    RunInvocation run_inv;
    ExperimentConfig& cfg = run_inv.config;
    std::uint32_t subset = 0;
    std::uint32_t rounds = 0;
    double duration = 500.0;
    std::uint64_t init_seed = 0;
    double handshake_s = 10.0;
    std::string out_path;
    std::string worker_cmd;

    app.add_option("--mode", cfg.mode, "concurrent or distributed")
        ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case))
        ->option_text("concurrent|distributed [concurrent]");
    app.add_option("--clients", cfg.n_clients, "Number of clients")->check(CLI::PositiveNumber)->capture_default_str();
    auto* subset_opt = app.add_option("--subset", subset, "Clients selected per round (default: all)")
                           ->check(CLI::PositiveNumber);
    add_client_options(app, cfg.client);
    auto* rounds_opt = app.add_option("--rounds", rounds, "Stop after this many rounds");
    auto* duration_opt = app.add_option("--duration", duration, "Stop after this many seconds (default 500)")
                             ->check(CLI::NonNegativeNumber);
    rounds_opt->excludes(duration_opt);
    app.add_option("--seed", cfg.seed, "Run seed")->capture_default_str();
    auto* init_opt = app.add_option("--init-seed", init_seed, "Draw initial weights from this seed instead of "
                                                              "the fixed set");
    app.add_option("--eval-samples", cfg.eval_samples, "Size of the evaluation batch behind the mse column")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    auto* listen_opt = app.add_option("--listen", cfg.listen_address, "host:port the server listens on");
    app.add_option("--out", out_path, "Metrics CSV path (default: stdout)");
    auto* worker_cmd_opt = app.add_option("--worker-cmd", worker_cmd,
                                          "Shell template that starts one worker; placeholders {addr} {id} {seed} "
                                          "{samples} {gradient_mode} {local_epochs} {local_training} {eta}");
    app.add_option("--handshake-timeout", handshake_s, "Seconds to wait for all workers to connect")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    WorkerInvocation worker_inv;
    auto* worker = app.add_subcommand("worker", "Serve as one client over TCP");
    worker->add_option("address", worker_inv.options.server_address, "Server host:port")->required();
    worker->add_option("client_id", worker_inv.options.client_id, "This client's id")->required();
    worker->add_option("seed", worker_inv.options.seed, "Seed of this client's sample stream")->required();
    add_client_options(*worker, worker_inv.options.settings);

    GenDataInvocation gen_inv;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen-data", "Write a generated dataset as x,y,t1,t2 CSV");
    gen->add_option("--seed", gen_inv.seed, "Generator seed")->capture_default_str();
    gen->add_option("--count", gen_inv.count, "Number of samples")->capture_default_str();
    auto* gen_out_opt = gen->add_option("--out", gen_out, "Output path (default: stdout)");
    app.require_subcommand(0, 1);

    std::vector<std::string> args(argv.size() > 1 ? argv.begin() + 1 : argv.end(), argv.end());
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        throw UsageError(app.help(), 0, true);
    } catch (const CLI::CallForAllHelp&) {
        throw UsageError(app.help("", CLI::AppFormatMode::All), 0, true);
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what(), kUsageExit);
    }

    if (worker->parsed()) {
        return Parsed{worker_inv, std::nullopt};
    }
    if (gen->parsed()) {
        if (*gen_out_opt) {
            gen_inv.out_path = gen_out;
        }
        return Parsed{RunInvocation{}, gen_inv};
    }

    if (*subset_opt) {
        cfg.subset_size = subset;
    }
    if (*rounds_opt) {
        cfg.stop = StopAfterRounds{rounds};
    } else {
        cfg.stop = StopAfterDuration{duration};
    }
    if (*init_opt) {
        cfg.initial = SeededWeights{init_seed};
    }
    if (!out_path.empty()) {
        run_inv.out_path = out_path;
    }
    if (*worker_cmd_opt) {
        cfg.worker_command = worker_cmd;
    }
    cfg.handshake_timeout = std::chrono::milliseconds(static_cast<long long>(handshake_s * 1000.0));

    if (cfg.mode == Mode::Distributed && !*listen_opt) {
        throw UsageError("--mode distributed requires --listen", kUsageExit);
    }
    if (cfg.mode == Mode::Concurrent && (*listen_opt || *worker_cmd_opt)) {
        throw UsageError("--listen and --worker-cmd only apply to --mode distributed", kUsageExit);
    }
    try {
        cfg.validate();
        if (*listen_opt) {
            net::parse_endpoint(cfg.listen_address);
        }
    } catch (const std::exception& e) {
        throw UsageError(e.what(), kUsageExit);
    }
    return Parsed{run_inv, std::nullopt};
}

int run_experiment(const RunInvocation& inv) {
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (inv.out_path) {
        file.open(*inv.out_path, std::ios::out | std::ios::trunc);
        if (!file) {
            std::cerr << "fedlearn: cannot open '" << *inv.out_path << "' for writing\n";
            return kRuntimeExit;
        }
        out = &file;
    }
    try {
        MetricsCsvWriter writer(*out);
        run(inv.config, [&writer](const RoundMetrics& m) { writer.write(m); });
    } catch (const std::exception& e) {
        std::cerr << "fedlearn: run aborted: " << e.what() << "\n";
        return kRuntimeExit;
    }
    return 0;
}

int generate_data(const GenDataInvocation& inv) {
    Rng rng(inv.seed);
    const std::vector<Sample> samples = gen_batch(rng, inv.count);
    if (!inv.out_path) {
        write_samples_csv(std::cout, samples);
        return 0;
    }
    std::ofstream file(*inv.out_path, std::ios::out | std::ios::trunc);
    if (!file) {
        std::cerr << "fedlearn: cannot open '" << *inv.out_path << "' for writing\n";
        return kRuntimeExit;
    }
    write_samples_csv(file, samples);
    return file ? 0 : kRuntimeExit;
}

} // namespace

Invocation parse_args(const std::vector<std::string>& argv) {
    Parsed p = parse(argv);
    if (p.gen_data) {
        throw UsageError("gen-data is not an experiment invocation", kUsageExit);
    }
    return p.invocation;
}

int main(const std::vector<std::string>& argv) {
    Parsed parsed;
    try {
        parsed = parse(argv);
    } catch (const UsageError& e) {
        (e.help() ? std::cout : std::cerr) << e.what() << (e.help() ? "" : "\nRun with --help for usage.\n");
        return e.exit_code();
    }
    if (parsed.gen_data) {
        return generate_data(*parsed.gen_data);
    }
    if (const auto* w = std::get_if<WorkerInvocation>(&parsed.invocation)) {
        return run_worker(w->options, std::cerr);
    }
    return run_experiment(std::get<RunInvocation>(parsed.invocation));
}

} // namespace fedlearn::cli
