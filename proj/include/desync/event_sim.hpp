#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "desync/round_engine.hpp"

namespace desync {

enum class Role { sync, desync };

// assumption1: every node updates once per round, at the round boundary, from
// the phases its neighbours announced during the previous round.
// live: the listener updates at the instant its predecessor fires.
enum class StalenessMode { assumption1, live };

// inhibitory: the Sync node jumps to (1-gamma) theta + gamma on the next
// channel's Sync fire, modulo 1.
// offset_consensus: the Sync node moves its offset (relative to the shared
// period grid) a fraction gamma toward the next channel's Sync offset.
// anchored: offset_consensus, except the last channel's Sync node holds its
// offset. Without the closing edge the ring has no twisted steady states.
enum class SyncRule { anchored, offset_consensus, inhibitory };

struct SimConfig {
    double period_T = 0.1;
    double alpha = 0.5;
    double gamma = 0.6;
    std::size_t channels = 1;
    std::size_t nodes = 4;
    double loss_probability = 0.0;
    // adjacency[u][w]: u hears w. Empty means full connectivity.
    std::vector<std::vector<bool>> adjacency;
    std::uint64_t rng_seed = 0;
    StalenessMode staleness_mode = StalenessMode::live;
    SyncRule sync_rule = SyncRule::anchored;
    bool nesterov = false;
    std::size_t consecutive_miss_threshold = 10;
    double guard_time = 0.006;
    double epsilon = 1e-3;
    // 0 selects 5000 periods.
    double max_time = 0.0;
    // Optional fixed start; otherwise phases are uniform on [0,1) and channels
    // uniform over [0, channels).
    std::optional<std::vector<double>> initial_phases;
    std::optional<std::vector<std::size_t>> initial_channels;
    bool balance = true;
    bool keep_trace = true;
    bool stop_at_convergence = true;
};

void validate(const SimConfig& config);

struct NesterovMemory {
    double prev_offset = 0.0;
    std::size_t k = 0;
};

struct HeardFire {
    double time = -1.0;
    std::size_t channel = 0;
    Role role = Role::desync;
    std::size_t occupancy = 0;
    bool valid() const noexcept { return time >= 0.0; }
};

struct NodeState {
    std::size_t node_id = 0;
    std::size_t channel = 0;
    Role role = Role::desync;
    double next_fire = 0.0;
    // Last fire heard from every node, indexed by node id.
    std::vector<HeardFire> last_heard;
    std::optional<NesterovMemory> nesterov_memory;
    std::size_t miss_counter = 0;
    bool full_listening = false;
};

struct FireEvent {
    double time = 0.0;
    std::size_t node_id = 0;
    std::size_t channel = 0;
};

struct TraceRecord {
    std::size_t round = 0;
    double sim_time = 0.0;
    // Per channel, starting at the Sync node (or the lowest phase when the
    // channel has no Sync node) and following the phase order.
    std::vector<std::vector<double>> channel_offsets;
    // Offset of every node, indexed by node id, in [0,1).
    std::vector<double> node_offsets;
    double objective = 0.0;
    std::vector<std::size_t> occupancy;
    bool converged = false;
    std::size_t order_changes = 0;
};

struct SwapOutcome {
    bool accepted = false;
    std::string reason;
};

struct SimulationResult {
    ConvergenceReport report;
    double time_to_convergence = 0.0;
    std::vector<TraceRecord> trace;
    std::vector<std::size_t> occupancy;
    std::size_t balancing_switches = 0;
};

// (1-alpha) theta + alpha (1 + theta_next) / 2, reduced into [0,1).
double desync_phase_update(double theta, double theta_next, double alpha);
// (1-gamma) theta + gamma, modulo 1.
double sync_phase_update(double theta, double gamma);

// Smallest id wins.
std::size_t elect_sync_node(const std::vector<std::size_t>& channel_nodes);

// Whether the balancing rule lets the Sync node of channel c move to c+1.
bool switch_permitted(std::size_t count_c, std::size_t count_next, bool last_channel);

// Random listen matrix where `hidden` nodes each ignore `ignored` other nodes.
std::vector<std::vector<bool>> hidden_node_adjacency(std::size_t nodes, std::size_t hidden,
                                                     std::size_t ignored, std::uint64_t seed);

class Simulation {
public:
    explicit Simulation(SimConfig config);

    const SimConfig& config() const noexcept { return config_; }
    double now() const noexcept { return now_; }
    std::size_t round() const noexcept { return round_; }
    const std::vector<NodeState>& nodes() const noexcept { return nodes_; }
    const NodeState& node(std::size_t id) const { return nodes_.at(id); }
    std::vector<std::size_t> occupancy() const;
    const std::vector<std::size_t>& channel_members(std::size_t c) const { return members_.at(c); }
    std::optional<std::size_t> sync_node(std::size_t c) const;

    // Phase of a node at the current clock, in [0,1).
    double theta(std::size_t id) const;

    // Moves Sync nodes between channels until no switching condition holds.
    // Returns the number of switches.
    std::size_t balance_channels();

    // Pops the earliest fire, advances the clock and wraps the firer to 0.
    FireEvent advance_to_next_fire();
    // Delivers a fire to every interested listener and applies live updates.
    void deliver(const FireEvent& event);

    // Bernoulli delivery on an adjacent pair, never on a hidden one. Updates the
    // listener's miss counter.
    bool apply_message_loss(const FireEvent& event, NodeState& listener);

    void on_fire_desync_update(NodeState& listener, const FireEvent& event);
    void on_fire_sync_update(NodeState& listener, const FireEvent& event);

    // Processes everything up to and including the next round boundary.
    TraceRecord run_round();
    TraceRecord snapshot() const;
    double objective_now() const;

    SwapOutcome swap_channels(std::size_t a, std::size_t b);
    // Position of a node in its channel's firing order, Sync node first.
    std::size_t slot_index(std::size_t id) const;

    // Fires and round boundaries processed so far.
    std::size_t fires() const noexcept { return fires_; }

private:
    using QueueKey = std::tuple<double, std::size_t, std::size_t>;

    double uniform();
    void place_nodes();
    void elect(std::size_t c);
    void reschedule(NodeState& node, double theta_new);
    void jump(NodeState& node, double theta_new);
    bool sync_holds(std::size_t channel) const;
    void push(const NodeState& node);
    void erase(const NodeState& node);
    void round_boundary();
    bool believes_next(const NodeState& listener, std::size_t firer) const;
    double cached_theta(const NodeState& listener, std::size_t other) const;
    double apply_momentum(NodeState& node, double theta_new, double own);
    std::vector<std::vector<std::size_t>> cyclic_orders() const;

    SimConfig config_;
    std::mt19937_64 rng_;
    std::vector<NodeState> nodes_;
    std::vector<std::vector<std::size_t>> members_;
    std::set<QueueKey> queue_;
    double now_ = 0.0;
    std::size_t round_ = 0;
    std::size_t fires_ = 0;
    std::vector<std::vector<std::size_t>> last_orders_;
};

SimulationResult run_simulation(const SimConfig& config);

// Columns: round,sim_time_s,objective,occupancy,converged
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace);

}  // namespace desync
