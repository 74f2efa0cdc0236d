#include "desync/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <tuple>

#include "json.hpp"

#include "desync/bounds.hpp"
#include "desync/spectral.hpp"

namespace desync {

namespace {

using nlohmann::json;

std::string fmt(double x)
{
    if (std::isnan(x))
        return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string tag(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

json optional_number(const std::optional<double>& x)
{
    return x ? json(*x) : json(nullptr);
}

std::optional<double> read_optional(const json& j)
{
    if (j.is_null())
        return std::nullopt;
    return j.get<double>();
}

// NaN is not representable in JSON; it round-trips through null.
json number(double x) { return std::isnan(x) ? json(nullptr) : json(x); }
double read_number(const json& j)
{
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

bool is_fast(const std::string& mode) { return mode.find("fast") != std::string::npos; }

}  // namespace

std::vector<BoundsRow> compare_bounds(const ExperimentSpec& spec, const SweepResult& sweep)
{
    if (spec.mode == Mode::much || spec.mode == Mode::fast_much)
        throw SpecError("mode: bounds need desync, fast-desync or single-channel event-sim");
    if (!spec.paired)
        throw SpecError("paired: bounds need both algorithms");

    using Key = std::tuple<std::size_t, double, double>;
    std::map<Key, std::pair<const SweepRow*, const SweepRow*>> pairs;
    std::vector<Key> order;
    for (const auto& r : sweep.rows) {
        if (r.channels != 1 || r.n < 2)
            continue;
        const Key key{r.n, r.alpha, r.epsilon};
        if (!pairs.count(key))
            order.push_back(key);
        auto& slot = pairs[key];
        (is_fast(r.mode) ? slot.second : slot.first) = &r;
    }

    std::vector<BoundsRow> out;
    for (const auto& key : order) {
        const auto& [plain, fast] = pairs[key];
        if (!plain || !fast)
            continue;
        BoundsRow row;
        row.n = std::get<0>(key);
        row.alpha = std::get<1>(key);
        row.epsilon = std::get<2>(key);
        row.trials = plain->trials;
        row.max_desync = plain->max_rounds;
        row.max_fast = fast->max_rounds;
        const SingleChannelProblem problem(row.n, row.alpha, row.epsilon);
        row.bound_desync = desync_round_bound_worst_case(problem);
        const auto fb = fast_desync_round_bound_worst_case(problem);
        row.bound_fast = fb.rounds;
        row.fast_guaranteed = fb.guaranteed;
        const bool desync_bad = plain->failures > 0 || !(row.max_desync <= row.bound_desync);
        const bool fast_bad = fast->failures > 0 || !(row.max_fast <= row.bound_fast);
        row.violated = desync_bad || (fast_bad && row.fast_guaranteed);
        out.push_back(row);
    }
    return out;
}

void write_bounds_csv(std::ostream& out, const std::vector<BoundsRow>& rows)
{
    out << "n,alpha,epsilon,trials,max_desync,max_fast,bound_desync,bound_fast,"
           "fast_guaranteed,violated\n";
    for (const auto& r : rows)
        out << r.n << ',' << fmt(r.alpha) << ',' << fmt(r.epsilon) << ',' << r.trials << ','
            << fmt(r.max_desync) << ',' << fmt(r.max_fast) << ',' << fmt(r.bound_desync) << ','
            << fmt(r.bound_fast) << ',' << (r.fast_guaranteed ? 1 : 0) << ','
            << (r.violated ? 1 : 0) << '\n';
}

std::vector<SpectraRow> certify_spectra(const ExperimentSpec& spec)
{
    if (spec.mode != Mode::much && spec.mode != Mode::fast_much)
        throw SpecError("mode: spectra need much or fast-much");
    std::vector<SpectraRow> out;
    for (const auto& counts : spec.channel_counts) {
        for (double beta : spec.beta_grid()) {
            for (double gamma : spec.gamma) {
                SpectraRow row;
                row.n = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
                row.channels = counts.size();
                row.beta = beta;
                row.gamma = gamma;
                if (!(beta > 0.0 && beta < 0.5)) {
                    row.diagnostic = "beta out of (0,1/2)";
                } else if (!(gamma > 0.0 && gamma < 1.0)) {
                    row.diagnostic = "gamma out of (0,1)";
                } else {
                    try {
                        const MultichannelProblem problem(counts, beta, gamma);
                        const auto rep = spectral_report(problem);
                        row.max_mismatch = rep.max_analytic_mismatch;
                        row.unit_multiplicity = rep.unit_eigenvalue_multiplicity;
                        row.spectral_radius = rep.spectral_radius_deflated;
                        if (!rep.solver_ok)
                            row.diagnostic = "eigensolver did not converge";
                        else if (!rep.converges)
                            row.diagnostic = "deflated spectral radius >= 1";
                        else if (rep.unit_eigenvalue_multiplicity != 1)
                            row.diagnostic = "eigenvalue 1 is not simple";
                        else if (rep.max_analytic_mismatch &&
                                 *rep.max_analytic_mismatch > spectral_match_tolerance)
                            row.diagnostic = "analytic and numeric spectra disagree";
                        row.pass = row.diagnostic.empty();
                    } catch (const std::exception& e) {
                        row.diagnostic = e.what();
                    }
                }
                out.push_back(row);
            }
        }
    }
    return out;
}

void write_spectra_csv(std::ostream& out, const std::vector<SpectraRow>& rows)
{
    out << "n,channels,beta,gamma,max_mismatch,unit_multiplicity,spectral_radius_deflated,pass,"
           "diagnostic\n";
    for (const auto& r : rows)
        out << r.n << ',' << r.channels << ',' << fmt(r.beta) << ',' << fmt(r.gamma) << ','
            << (r.max_mismatch ? fmt(*r.max_mismatch) : std::string()) << ','
            << r.unit_multiplicity << ',' << fmt(r.spectral_radius) << ',' << (r.pass ? 1 : 0)
            << ',' << r.diagnostic << '\n';
}

std::vector<std::filesystem::path> emit_plotdata(const SweepResult& sweep,
                                                 const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

    auto open = [](const std::filesystem::path& path) {
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("cannot write " + path.string());
        return out;
    };
    const char* header = "# alpha mean_rounds max_rounds std_rounds bound_desync bound_fast\n";

    std::vector<std::filesystem::path> written;
    std::map<std::string, std::vector<const SweepRow*>> series;
    std::vector<std::string> order;
    for (const auto& r : sweep.rows) {
        std::string name = r.mode + "_n" + std::to_string(r.n) + "_c" + std::to_string(r.channels);
        if (r.gamma)
            name += "_g" + tag(*r.gamma);
        name += "_eps" + tag(r.epsilon) + ".dat";
        if (!series.count(name))
            order.push_back(name);
        series[name].push_back(&r);
    }
    if (series.empty()) {
        const auto path = dir / "series.dat";
        open(path) << header;
        written.push_back(path);
    }
    for (const auto& name : order) {
        const auto path = dir / name;
        auto out = open(path);
        out << header;
        for (const auto* r : series[name])
            out << fmt(r->alpha) << ' ' << fmt(r->mean_rounds) << ' ' << fmt(r->max_rounds) << ' '
                << fmt(r->std_rounds) << ' ' << (r->bound_desync ? fmt(*r->bound_desync) : "-")
                << ' ' << (r->bound_fast ? fmt(*r->bound_fast) : "-") << '\n';
        written.push_back(path);
    }

    json rows = json::array();
    for (const auto& r : sweep.rows) {
        rows.push_back({{"mode", r.mode},
                        {"n", r.n},
                        {"channels", r.channels},
                        {"alpha", r.alpha},
                        {"gamma", optional_number(r.gamma)},
                        {"epsilon", r.epsilon},
                        {"trials", r.trials},
                        {"failures", r.failures},
                        {"mean_rounds", number(r.mean_rounds)},
                        {"max_rounds", number(r.max_rounds)},
                        {"std_rounds", number(r.std_rounds)},
                        {"bound_desync", optional_number(r.bound_desync)},
                        {"bound_fast", optional_number(r.bound_fast)},
                        {"speedup_pct", optional_number(r.speedup_pct)}});
    }
    json summary = {{"alpha_grid", sweep.alpha_grid},
                    {"epsilon_grid", sweep.epsilon_grid},
                    {"failed_trials", sweep.failed_trials},
                    {"failure_messages", sweep.failure_messages},
                    {"rows", rows}};
    const auto path = dir / "summary.json";
    open(path) << summary.dump(2) << '\n';
    written.push_back(path);
    return written;
}

SweepResult read_summary_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    SweepResult s;
    s.alpha_grid = j.at("alpha_grid").get<std::vector<double>>();
    s.epsilon_grid = j.at("epsilon_grid").get<std::vector<double>>();
    s.failed_trials = j.at("failed_trials").get<std::size_t>();
    s.failure_messages = j.at("failure_messages").get<std::vector<std::string>>();
    for (const auto& r : j.at("rows")) {
        SweepRow row;
        row.mode = r.at("mode").get<std::string>();
        row.n = r.at("n").get<std::size_t>();
        row.channels = r.at("channels").get<std::size_t>();
        row.alpha = r.at("alpha").get<double>();
        row.gamma = read_optional(r.at("gamma"));
        row.epsilon = r.at("epsilon").get<double>();
        row.trials = r.at("trials").get<std::size_t>();
        row.failures = r.at("failures").get<std::size_t>();
        row.mean_rounds = read_number(r.at("mean_rounds"));
        row.max_rounds = read_number(r.at("max_rounds"));
        row.std_rounds = read_number(r.at("std_rounds"));
        row.bound_desync = read_optional(r.at("bound_desync"));
        row.bound_fast = read_optional(r.at("bound_fast"));
        row.speedup_pct = read_optional(r.at("speedup_pct"));
        s.rows.push_back(std::move(row));
    }
    return s;
}

}  // namespace desync
