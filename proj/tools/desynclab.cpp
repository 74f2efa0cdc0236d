// desynclab: sweeps, bound checks, spectral certificates and single simulations.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "desync/experiment.hpp"

namespace {

enum Exit { ok = 0, validation = 2, bound_violation = 3, trial_failure = 4 };

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::optional<std::string> out;
    std::optional<std::size_t> workers;
    std::string summary;
    bool quiet = false;
};

desync::ExperimentSpec load(const Options& opt)
{
    auto spec = desync::load_spec(opt.config);
    if (opt.seed)
        spec.seed_base = *opt.seed;
    if (opt.trials)
        spec.trials = *opt.trials;
    if (opt.out)
        spec.output_dir = *opt.out;
    if (opt.workers)
        spec.workers = *opt.workers;
    desync::validate(spec);
    return spec;
}

std::ofstream open_out(const std::filesystem::path& path)
{
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    return out;
}

void report_failures(const desync::SweepResult& sweep)
{
    for (const auto& msg : sweep.failure_messages)
        std::cerr << "trial failure: " << msg << '\n';
    if (sweep.failed_trials > sweep.failure_messages.size())
        std::cerr << "... " << sweep.failed_trials - sweep.failure_messages.size()
                  << " more failures\n";
}

desync::SweepResult sweep(const desync::ExperimentSpec& spec, const Options& opt)
{
    desync::ProgressFn progress;
    if (!opt.quiet)
        progress = [](const std::string& line) { std::cerr << line << '\n'; };
    return desync::run_sweep(spec, true, progress);
}

int cmd_sweep(const Options& opt)
{
    const auto spec = load(opt);
    std::cout << desync::serialize_spec(spec);
    const auto result = sweep(spec, opt);
    desync::emit_plotdata(result, std::filesystem::path(spec.output_dir) / "plot");
    std::cout << "wrote " << (std::filesystem::path(spec.output_dir) / "sweep.csv").string()
              << '\n';
    report_failures(result);
    return result.failed_trials ? trial_failure : ok;
}

int cmd_bounds(const Options& opt)
{
    const auto spec = load(opt);
    std::cout << desync::serialize_spec(spec);
    const auto result = sweep(spec, opt);
    const auto rows = desync::compare_bounds(spec, result);
    const auto path = std::filesystem::path(spec.output_dir) / "bounds.csv";
    auto out = open_out(path);
    desync::write_bounds_csv(out, rows);
    desync::write_bounds_csv(std::cout, rows);
    report_failures(result);
    for (const auto& r : rows)
        if (r.violated) {
            std::cerr << "bound violation at n=" << r.n << " alpha=" << r.alpha
                      << " epsilon=" << r.epsilon << '\n';
            return bound_violation;
        }
    return result.failed_trials ? trial_failure : ok;
}

int cmd_spectra(const Options& opt)
{
    const auto spec = load(opt);
    std::cout << desync::serialize_spec(spec);
    const auto rows = desync::certify_spectra(spec);
    const auto path = std::filesystem::path(spec.output_dir) / "spectra.csv";
    auto out = open_out(path);
    desync::write_spectra_csv(out, rows);
    desync::write_spectra_csv(std::cout, rows);
    for (const auto& r : rows)
        if (!r.pass)
            return validation;
    return ok;
}

int cmd_simulate(const Options& opt)
{
    const auto spec = load(opt);
    if (spec.mode != desync::Mode::event_sim)
        throw desync::SpecError("mode: simulate needs event-sim");
    std::cout << desync::serialize_spec(spec);

    desync::SimConfig cfg;
    cfg.period_T = spec.period_T;
    cfg.alpha = spec.alpha.front();
    cfg.gamma = spec.gamma.empty() ? 0.6 : spec.gamma.front();
    cfg.epsilon = spec.epsilon.front();
    cfg.rng_seed = spec.seed_base;
    cfg.staleness_mode = spec.staleness;
    cfg.sync_rule = spec.sync_rule;
    cfg.loss_probability = spec.loss_probability;
    cfg.nesterov = spec.nesterov;
    if (spec.max_rounds)
        cfg.max_time = static_cast<double>(*spec.max_rounds) * spec.period_T;
    if (!spec.channel_counts.empty()) {
        const auto& counts = spec.channel_counts.front();
        cfg.channels = counts.size();
        cfg.nodes = 0;
        for (auto n : counts)
            cfg.nodes += n;
    } else {
        cfg.nodes = spec.n.front();
    }
    if (spec.hidden_nodes > 0)
        cfg.adjacency = desync::hidden_node_adjacency(cfg.nodes, spec.hidden_nodes,
                                                      spec.hidden_ignored, spec.seed_base);

    const auto result = desync::run_simulation(cfg);
    const auto path = std::filesystem::path(spec.output_dir) / "trace.csv";
    auto out = open_out(path);
    desync::write_trace_csv(out, result.trace);
    std::cout << "converged=" << (result.report.converged ? "true" : "false")
              << " rounds=" << result.report.rounds
              << " time_s=" << result.time_to_convergence
              << " objective=" << result.report.final_objective << "\nwrote " << path.string()
              << '\n';
    return result.report.converged ? ok : trial_failure;
}

int cmd_plotdata(const Options& opt)
{
    desync::SweepResult result;
    std::filesystem::path dir;
    if (!opt.summary.empty()) {
        result = desync::read_summary_json(opt.summary);
        dir = opt.out ? std::filesystem::path(*opt.out)
                      : std::filesystem::path(opt.summary).parent_path();
    } else {
        const auto spec = load(opt);
        result = sweep(spec, opt);
        dir = std::filesystem::path(spec.output_dir) / "plot";
    }
    for (const auto& p : desync::emit_plotdata(result, dir))
        std::cout << "wrote " << p.string() << '\n';
    return result.failed_trials ? trial_failure : ok;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Desynchronization lab: Desync, Fast-Desync and multichannel Sync-Desync"};
    app.require_subcommand(1);
    Options opt;

    auto common = [&](CLI::App* sub, bool config_required) {
        auto* c = sub->add_option("--config", opt.config, "experiment config (YAML or JSON)");
        if (config_required)
            c->required();
        sub->add_option("--seed", opt.seed, "seed base");
        sub->add_option("--trials", opt.trials, "trials per grid point");
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--workers", opt.workers, "worker threads");
        sub->add_flag("--quiet", opt.quiet, "no progress output");
    };
    auto* s_sweep = app.add_subcommand("sweep", "run a parameter sweep");
    auto* s_bounds = app.add_subcommand("bounds", "compare observed rounds with the bounds");
    auto* s_spectra = app.add_subcommand("spectra", "certify the multichannel iteration");
    auto* s_sim = app.add_subcommand("simulate", "run one event-driven simulation");
    auto* s_plot = app.add_subcommand("plotdata", "write gnuplot series and a JSON summary");
    common(s_sweep, true);
    common(s_bounds, true);
    common(s_spectra, true);
    common(s_sim, true);
    common(s_plot, false);
    s_plot->add_option("--summary", opt.summary, "re-emit from an existing summary.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : validation;
    }

    try {
        if (*s_sweep)
            return cmd_sweep(opt);
        if (*s_bounds)
            return cmd_bounds(opt);
        if (*s_spectra)
            return cmd_spectra(opt);
        if (*s_sim)
            return cmd_simulate(opt);
        if (*s_plot) {
            if (opt.summary.empty() && opt.config.empty()) {
                std::cerr << "plotdata needs --config or --summary\n";
                return validation;
            }
            return cmd_plotdata(opt);
        }
    } catch (const desync::SpecError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return validation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return trial_failure;
    }
    return ok;
}
