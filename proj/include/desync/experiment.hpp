#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "desync/event_sim.hpp"
#include "desync/phase_vector.hpp"

namespace desync {

enum class Mode { desync, fast_desync, much, fast_much, event_sim };

std::string to_string(Mode mode);
std::string to_string(SyncRule rule);
Mode mode_from_string(const std::string& text);

struct ExperimentSpec {
    Mode mode = Mode::desync;
    std::vector<std::size_t> n;
    std::vector<std::vector<std::size_t>> channel_counts;
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<double> gamma;
    std::vector<double> epsilon;
    std::size_t trials = 400;
    std::uint64_t seed_base = 0;
    std::size_t workers = 1;
    std::optional<std::size_t> max_rounds;
    // Also run the accelerated (or plain) counterpart so speed-ups can be reported.
    bool paired = true;
    std::string output_dir = "out";

    // event-sim only
    StalenessMode staleness = StalenessMode::live;
    SyncRule sync_rule = SyncRule::anchored;
    double period_T = 0.1;
    double loss_probability = 0.0;
    std::size_t hidden_nodes = 0;
    std::size_t hidden_ignored = 4;
    // Accelerated variant for `simulate` and for unpaired event-sim sweeps.
    bool nesterov = false;

    bool operator==(const ExperimentSpec&) const = default;

    // Step sizes of the multichannel grid: beta if given, alpha / 2 otherwise.
    std::vector<double> beta_grid() const;
};

class SpecError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// YAML (block or flow) or JSON text. Unknown keys and out-of-range values
// throw SpecError naming the key.
ExperimentSpec parse_spec(const std::string& text);
ExperimentSpec load_spec(const std::filesystem::path& path);
// Full spec, defaults included.
std::string serialize_spec(const ExperimentSpec& spec);
void validate(const ExperimentSpec& spec);

// {0.05, 0.10, ..., 0.95}
std::vector<double> default_alpha_grid();

// n i.i.d. uniform phases on [0,1), sorted ascending.
PhaseVector random_start(std::size_t n, std::uint64_t seed);
// One sorted random start per channel.
PhaseSet random_multichannel_start(const std::vector<std::size_t>& counts, std::uint64_t seed);

struct TrialOutcome {
    std::size_t rounds = 0;
    bool ok = false;
    std::string error;
};

struct SweepRow {
    std::string mode;
    std::size_t n = 0;
    std::size_t channels = 1;
    double alpha = 0.0;
    std::optional<double> gamma;
    double epsilon = 0.0;
    std::size_t trials = 0;
    std::size_t failures = 0;
    double mean_rounds = 0.0;
    double max_rounds = 0.0;
    double std_rounds = 0.0;
    std::optional<double> bound_desync;
    std::optional<double> bound_fast;
    std::optional<double> speedup_pct;

    bool operator==(const SweepRow&) const = default;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::size_t failed_trials = 0;
    std::vector<std::string> failure_messages;
    std::vector<double> alpha_grid;
    std::vector<double> epsilon_grid;

    bool operator==(const SweepResult&) const = default;
};

using ProgressFn = std::function<void(const std::string&)>;

// Runs every grid point with seeds seed_base + trial index. Writes sweep CSVs
// into spec.output_dir when write_files is set.
SweepResult run_sweep(const ExperimentSpec& spec, bool write_files = true,
                      const ProgressFn& progress = {});

// Trial-level entry points, also used by the acceptance checks.
TrialOutcome run_trial(Mode mode, const ExperimentSpec& spec, std::size_t grid_n,
                       const std::vector<std::size_t>& counts, double step, double gamma,
                       double epsilon, std::uint64_t seed, bool accelerated);

// Mean, maximum and sample standard deviation of the successful trials.
struct RoundStats {
    double mean = 0.0;
    double max = 0.0;
    double std = 0.0;
    std::size_t count = 0;
};
RoundStats summarize(const std::vector<TrialOutcome>& outcomes);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

struct BoundsRow {
    std::size_t n = 0;
    double alpha = 0.0;
    double epsilon = 0.0;
    std::size_t trials = 0;
    double max_desync = 0.0;
    double max_fast = 0.0;
    double bound_desync = 0.0;
    double bound_fast = 0.0;
    bool fast_guaranteed = true;
    bool violated = false;
};

std::vector<BoundsRow> compare_bounds(const ExperimentSpec& spec, const SweepResult& sweep);
void write_bounds_csv(std::ostream& out, const std::vector<BoundsRow>& rows);

struct SpectraRow {
    std::size_t n = 0;
    std::size_t channels = 0;
    double beta = 0.0;
    double gamma = 0.0;
    std::optional<double> max_mismatch;
    std::size_t unit_multiplicity = 0;
    double spectral_radius = 0.0;
    bool pass = false;
    std::string diagnostic;
};

// Matches analytic against numeric eigenvalues within this tolerance.
inline constexpr double spectral_match_tolerance = 1e-9;

std::vector<SpectraRow> certify_spectra(const ExperimentSpec& spec);
void write_spectra_csv(std::ostream& out, const std::vector<SpectraRow>& rows);

// Gnuplot series (one file per algorithm and curve) plus summary.json.
// Returns the files written.
std::vector<std::filesystem::path> emit_plotdata(const SweepResult& sweep,
                                                 const std::filesystem::path& dir);
SweepResult read_summary_json(const std::filesystem::path& path);

}  // namespace desync
