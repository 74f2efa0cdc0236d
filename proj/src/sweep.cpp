#include "desync/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <thread>

#include "desync/bounds.hpp"
#include "desync/round_engine.hpp"

namespace desync {

namespace {

constexpr std::size_t max_failure_messages = 50;

struct GridPoint {
    std::size_t n = 0;
    std::vector<std::size_t> counts;
    double step = 0.0;  // alpha for single-channel and event-sim, beta for the vector multichannel modes
    std::optional<double> gamma;
    double epsilon = 0.0;
};

struct Variant {
    std::string name;
    bool accelerated;
};

std::vector<Variant> variants(const ExperimentSpec& spec)
{
    std::string plain, fast;
    switch (spec.mode) {
    case Mode::desync:
    case Mode::fast_desync:
        plain = "desync";
        fast = "fast-desync";
        break;
    case Mode::much:
    case Mode::fast_much:
        plain = "much";
        fast = "fast-much";
        break;
    case Mode::event_sim:
        plain = "event-sim";
        fast = "event-sim-fast";
        break;
    }
    const bool primary_fast = spec.mode == Mode::fast_desync || spec.mode == Mode::fast_much ||
                              (spec.mode == Mode::event_sim && spec.nesterov);
    if (spec.paired)
        return {{plain, false}, {fast, true}};
    return {primary_fast ? Variant{fast, true} : Variant{plain, false}};
}

std::vector<GridPoint> grid(const ExperimentSpec& spec)
{
    std::vector<GridPoint> points;
    const bool vector_multi = spec.mode == Mode::much || spec.mode == Mode::fast_much;
    std::vector<std::vector<std::size_t>> layouts;
    if (vector_multi || (spec.mode == Mode::event_sim && !spec.channel_counts.empty()))
        layouts = spec.channel_counts;
    if (!vector_multi)
        for (std::size_t n : spec.n)
            layouts.push_back({n});

    const std::vector<double> steps = vector_multi ? spec.beta_grid() : spec.alpha;
    for (const auto& layout : layouts) {
        const bool multi = layout.size() >= 2;
        std::vector<std::optional<double>> gammas;
        if (multi)
            for (double g : spec.gamma)
                gammas.emplace_back(g);
        else
            gammas.emplace_back(std::nullopt);
        for (double step : steps)
            for (const auto& g : gammas)
                for (double eps : spec.epsilon) {
                    GridPoint p;
                    p.n = *std::max_element(layout.begin(), layout.end());
                    if (multi)
                        p.counts = layout;
                    p.step = step;
                    p.gamma = g;
                    p.epsilon = eps;
                    points.push_back(std::move(p));
                }
    }
    return points;
}

std::string fmt(double x)
{
    if (std::isnan(x))
        return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

SimConfig sim_config(const ExperimentSpec& spec, std::size_t n,
                     const std::vector<std::size_t>& counts, double alpha, double gamma,
                     double epsilon, std::uint64_t seed, bool accelerated)
{
    SimConfig cfg;
    cfg.period_T = spec.period_T;
    cfg.alpha = alpha;
    cfg.gamma = gamma;
    cfg.rng_seed = seed;
    cfg.staleness_mode = spec.staleness;
    cfg.sync_rule = spec.sync_rule;
    cfg.nesterov = accelerated;
    cfg.loss_probability = spec.loss_probability;
    cfg.epsilon = epsilon;
    cfg.keep_trace = false;
    if (spec.max_rounds)
        cfg.max_time = static_cast<double>(*spec.max_rounds) * spec.period_T;
    if (counts.size() >= 2) {
        cfg.channels = counts.size();
        std::vector<std::size_t> placement;
        for (std::size_t c = 0; c < counts.size(); ++c)
            placement.insert(placement.end(), counts[c], c);
        cfg.nodes = placement.size();
        cfg.initial_channels = std::move(placement);
    } else {
        cfg.channels = 1;
        cfg.nodes = n;
    }
    if (spec.hidden_nodes > 0)
        cfg.adjacency = hidden_node_adjacency(cfg.nodes, spec.hidden_nodes, spec.hidden_ignored,
                                              seed ^ 0x9e3779b97f4a7c15ULL);
    return cfg;
}

}  // namespace

TrialOutcome run_trial(Mode mode, const ExperimentSpec& spec, std::size_t grid_n,
                       const std::vector<std::size_t>& counts, double step, double gamma,
                       double epsilon, std::uint64_t seed, bool accelerated)
{
    TrialOutcome out;
    try {
        ConvergenceReport report;
        switch (mode) {
        case Mode::desync:
        case Mode::fast_desync: {
            const SingleChannelProblem problem(grid_n, step, epsilon);
            const RunLimits limits{epsilon, spec.max_rounds.value_or(default_max_rounds(problem)),
                                   false};
            auto phi0 = random_start(grid_n, seed);
            if (accelerated) {
                auto state = NesterovState::start(std::move(phi0));
                report = run_until_convergence(state, problem, limits);
            } else {
                DesyncState state{std::move(phi0), 0};
                report = run_until_convergence(state, problem, limits);
            }
            break;
        }
        case Mode::much:
        case Mode::fast_much: {
            const MultichannelProblem problem(counts, step, gamma);
            const RunLimits limits{
                epsilon, spec.max_rounds.value_or(default_max_rounds(problem, epsilon)), false};
            auto phis = random_multichannel_start(counts, seed);
            auto state = accelerated ? MultichannelState::accelerated(std::move(phis))
                                     : MultichannelState::plain(std::move(phis));
            report = run_until_convergence(state, problem, limits);
            break;
        }
        case Mode::event_sim: {
            const auto result = run_simulation(
                sim_config(spec, grid_n, counts, step, gamma, epsilon, seed, accelerated));
            report = result.report;
            break;
        }
        }
        out.rounds = report.rounds;
        out.ok = report.converged;
        if (!out.ok)
            out.error = "not converged after " + std::to_string(report.rounds) + " rounds";
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

RoundStats summarize(const std::vector<TrialOutcome>& outcomes)
{
    RoundStats s;
    std::vector<double> r;
    for (const auto& o : outcomes)
        if (o.ok)
            r.push_back(static_cast<double>(o.rounds));
    s.count = r.size();
    if (r.empty()) {
        s.mean = s.max = s.std = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    s.mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    s.max = *std::max_element(r.begin(), r.end());
    if (r.size() > 1) {
        double acc = 0.0;
        for (double x : r)
            acc += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(acc / static_cast<double>(r.size() - 1));
    }
    return s;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows)
{
    out << "mode,n,channels,alpha,gamma,epsilon,trials,mean_rounds,max_rounds,std_rounds,"
           "bound_desync,bound_fast,speedup_pct\n";
    for (const auto& r : rows) {
        out << r.mode << ',' << r.n << ',' << r.channels << ',' << fmt(r.alpha) << ','
            << fmt(r.gamma) << ',' << fmt(r.epsilon) << ',' << r.trials << ','
            << fmt(r.mean_rounds) << ',' << fmt(r.max_rounds) << ',' << fmt(r.std_rounds) << ','
            << fmt(r.bound_desync) << ',' << fmt(r.bound_fast) << ',' << fmt(r.speedup_pct)
            << '\n';
    }
}

SweepResult run_sweep(const ExperimentSpec& spec, bool write_files, const ProgressFn& progress)
{
    validate(spec);
    const auto points = grid(spec);
    const auto vars = variants(spec);
    const std::size_t per_point = vars.size() * spec.trials;
    const std::size_t total = points.size() * per_point;
    const bool vector_multi = spec.mode == Mode::much || spec.mode == Mode::fast_much;

    std::vector<TrialOutcome> outcomes(total);
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (std::size_t job = cursor++; job < total; job = cursor++) {
            const auto& p = points[job / per_point];
            const std::size_t rest = job % per_point;
            const auto& v = vars[rest / spec.trials];
            const std::size_t trial = rest % spec.trials;
            outcomes[job] = run_trial(spec.mode, spec, p.n, p.counts, p.step,
                                      p.gamma.value_or(0.5), p.epsilon,
                                      spec.seed_base + trial, v.accelerated);
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(spec.workers, total));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    SweepResult result;
    result.alpha_grid = spec.alpha.empty() ? std::vector<double>{} : spec.alpha;
    if (result.alpha_grid.empty())
        for (double b : spec.beta)
            result.alpha_grid.push_back(beta_to_alpha(b));
    result.epsilon_grid = spec.epsilon;

    for (std::size_t pi = 0; pi < points.size(); ++pi) {
        const auto& p = points[pi];
        std::vector<SweepRow> rows;
        for (std::size_t vi = 0; vi < vars.size(); ++vi) {
            const auto first = outcomes.begin() +
                               static_cast<std::ptrdiff_t>(pi * per_point + vi * spec.trials);
            std::vector<TrialOutcome> slice(first, first + static_cast<std::ptrdiff_t>(spec.trials));
            const auto stats = summarize(slice);

            SweepRow row;
            row.mode = vars[vi].name;
            row.n = p.n;
            row.channels = p.counts.empty() ? 1 : p.counts.size();
            row.alpha = vector_multi ? beta_to_alpha(p.step) : p.step;
            row.gamma = p.gamma;
            row.epsilon = p.epsilon;
            row.trials = spec.trials;
            row.failures = spec.trials - stats.count;
            row.mean_rounds = stats.mean;
            row.max_rounds = stats.max;
            row.std_rounds = stats.std;
            if (row.channels == 1 && p.n >= 2) {
                const SingleChannelProblem problem(p.n, row.alpha, p.epsilon);
                row.bound_desync = desync_round_bound_worst_case(problem);
                row.bound_fast = fast_desync_round_bound_worst_case(problem).rounds;
            }
            for (std::size_t t = 0; t < slice.size(); ++t) {
                if (slice[t].ok)
                    continue;
                ++result.failed_trials;
                if (result.failure_messages.size() < max_failure_messages)
                    result.failure_messages.push_back(
                        row.mode + " n=" + std::to_string(row.n) + " C=" +
                        std::to_string(row.channels) + " alpha=" + fmt(row.alpha) +
                        " eps=" + fmt(row.epsilon) + " seed=" +
                        std::to_string(spec.seed_base + t) + ": " + slice[t].error);
            }
            rows.push_back(std::move(row));
        }
        if (rows.size() == 2) {
            const double plain = rows[0].mean_rounds;
            const double fast = rows[1].mean_rounds;
            if (plain > 0.0 && std::isfinite(plain) && std::isfinite(fast)) {
                const double s = (plain - fast) / plain * 100.0;
                rows[0].speedup_pct = s;
                rows[1].speedup_pct = s;
            }
        }
        for (auto& r : rows) {
            if (progress)
                progress(r.mode + " n=" + std::to_string(r.n) + " C=" +
                         std::to_string(r.channels) + " alpha=" + fmt(r.alpha) +
                         " eps=" + fmt(r.epsilon) + " mean=" + fmt(r.mean_rounds));
            result.rows.push_back(std::move(r));
        }
    }

    if (write_files) {
        const std::filesystem::path dir(spec.output_dir);
        std::filesystem::create_directories(dir);
        {
            std::ofstream out(dir / "sweep.csv");
            if (!out)
                throw std::runtime_error("cannot write " + (dir / "sweep.csv").string());
            write_sweep_csv(out, result.rows);
        }
        std::map<std::pair<std::size_t, std::size_t>, std::vector<SweepRow>> groups;
        for (const auto& r : result.rows)
            groups[{r.n, r.channels}].push_back(r);
        for (const auto& [key, rows] : groups) {
            const auto path = dir / ("sweep_n" + std::to_string(key.first) + "_c" +
                                     std::to_string(key.second) + ".csv");
            std::ofstream out(path);
            if (!out)
                throw std::runtime_error("cannot write " + path.string());
            write_sweep_csv(out, rows);
        }
    }
    return result;
}

}  // namespace desync
