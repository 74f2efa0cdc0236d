#include "desync/event_sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "desync/objectives.hpp"

namespace desync {

namespace {

constexpr double default_periods = 5000.0;
// Fires this close past a round boundary still belong to the closing round.
constexpr double boundary_slack = 1e-9;

double wrap01(double x)
{
    double r = x - std::floor(x);
    if (r >= 1.0)
        r = 0.0;
    return r;
}

// Signed circular difference in [-0.5, 0.5).
double circular(double x)
{
    return x - std::floor(x + 0.5);
}

double unit_draw(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t index_draw(std::mt19937_64& rng, std::size_t bound)
{
    auto k = static_cast<std::size_t>(unit_draw(rng) * static_cast<double>(bound));
    return std::min(k, bound - 1);
}

}  // namespace

void validate(const SimConfig& config)
{
    if (!(config.period_T > 0.0))
        throw std::invalid_argument("period_T must be positive");
    if (!(config.alpha > 0.0 && config.alpha < 1.0))
        throw std::invalid_argument("alpha out of (0,1)");
    if (!(config.gamma > 0.0 && config.gamma < 1.0))
        throw std::invalid_argument("gamma out of (0,1)");
    if (config.channels < 1)
        throw std::invalid_argument("channels must be >= 1");
    if (config.nodes < 1)
        throw std::invalid_argument("nodes must be >= 1");
    if (!(config.loss_probability >= 0.0 && config.loss_probability < 1.0))
        throw std::invalid_argument("loss_probability out of [0,1)");
    if (!(config.epsilon > 0.0))
        throw std::invalid_argument("epsilon must be positive");
    if (config.max_time < 0.0)
        throw std::invalid_argument("max_time must be >= 0");
    if (!config.adjacency.empty()) {
        if (config.adjacency.size() != config.nodes)
            throw std::invalid_argument("adjacency must be nodes x nodes");
        for (const auto& row : config.adjacency)
            if (row.size() != config.nodes)
                throw std::invalid_argument("adjacency must be nodes x nodes");
    }
    if (config.initial_phases) {
        if (config.initial_phases->size() != config.nodes)
            throw std::invalid_argument("initial_phases length must equal nodes");
        for (double p : *config.initial_phases)
            if (!(p >= 0.0 && p < 1.0))
                throw std::invalid_argument("initial phase out of [0,1)");
    }
    if (config.initial_channels) {
        if (config.initial_channels->size() != config.nodes)
            throw std::invalid_argument("initial_channels length must equal nodes");
        for (std::size_t c : *config.initial_channels)
            if (c >= config.channels)
                throw std::invalid_argument("initial channel index out of range");
    }
}

double desync_phase_update(double theta, double theta_next, double alpha)
{
    return wrap01((1.0 - alpha) * theta + alpha * (1.0 + theta_next) / 2.0);
}

double sync_phase_update(double theta, double gamma)
{
    return wrap01((1.0 - gamma) * theta + gamma);
}

std::size_t elect_sync_node(const std::vector<std::size_t>& channel_nodes)
{
    if (channel_nodes.empty())
        throw std::invalid_argument("cannot elect a Sync node in an empty channel");
    return *std::min_element(channel_nodes.begin(), channel_nodes.end());
}

bool switch_permitted(std::size_t count_c, std::size_t count_next, bool last_channel)
{
    const std::size_t needed = last_channel ? 2 : 1;
    return count_c >= count_next + needed;
}

std::vector<std::vector<bool>> hidden_node_adjacency(std::size_t nodes, std::size_t hidden,
                                                     std::size_t ignored, std::uint64_t seed)
{
    if (hidden > nodes || ignored + 1 > nodes)
        throw std::invalid_argument("hidden-node layout does not fit the network");
    std::mt19937_64 rng(seed);
    std::vector<std::vector<bool>> adj(nodes, std::vector<bool>(nodes, true));

    auto pick = [&](std::vector<std::size_t> pool, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t j = i + index_draw(rng, pool.size() - i);
            std::swap(pool[i], pool[j]);
        }
        pool.resize(count);
        return pool;
    };

    std::vector<std::size_t> all(nodes);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t u : pick(all, hidden)) {
        std::vector<std::size_t> others;
        for (std::size_t w = 0; w < nodes; ++w)
            if (w != u)
                others.push_back(w);
        for (std::size_t w : pick(others, ignored))
            adj[u][w] = false;
    }
    return adj;
}

Simulation::Simulation(SimConfig config) : config_(std::move(config)), rng_(config_.rng_seed)
{
    validate(config_);
    place_nodes();
    last_orders_ = cyclic_orders();
}

double Simulation::uniform() { return unit_draw(rng_); }

void Simulation::place_nodes()
{
    const std::size_t n = config_.nodes;
    nodes_.resize(n);
    for (std::size_t id = 0; id < n; ++id) {
        auto& node = nodes_[id];
        node.node_id = id;
        node.last_heard.assign(n, HeardFire{});
        const double theta = config_.initial_phases ? (*config_.initial_phases)[id] : uniform();
        node.next_fire = (1.0 - theta) * config_.period_T;
    }
    members_.assign(config_.channels, {});
    for (std::size_t id = 0; id < n; ++id) {
        const std::size_t c = config_.initial_channels ? (*config_.initial_channels)[id]
                                                       : index_draw(rng_, config_.channels);
        nodes_[id].channel = c;
        members_[c].push_back(id);
    }
    for (std::size_t c = 0; c < config_.channels; ++c)
        elect(c);
    for (const auto& node : nodes_)
        push(node);
}

void Simulation::elect(std::size_t c)
{
    auto& list = members_[c];
    std::sort(list.begin(), list.end());
    if (list.empty())
        return;
    const std::size_t leader = elect_sync_node(list);
    for (std::size_t id : list)
        nodes_[id].role =
            (config_.channels >= 2 && id == leader) ? Role::sync : Role::desync;
}

std::vector<std::size_t> Simulation::occupancy() const
{
    std::vector<std::size_t> out;
    for (const auto& m : members_)
        out.push_back(m.size());
    return out;
}

std::optional<std::size_t> Simulation::sync_node(std::size_t c) const
{
    for (std::size_t id : members_.at(c))
        if (nodes_[id].role == Role::sync)
            return id;
    return std::nullopt;
}

double Simulation::theta(std::size_t id) const
{
    const double remaining = (nodes_.at(id).next_fire - now_) / config_.period_T;
    if (remaining <= 0.0)
        return std::nextafter(1.0, 0.0);
    if (remaining >= 1.0)
        return 0.0;
    return 1.0 - remaining;
}

void Simulation::push(const NodeState& node)
{
    queue_.emplace(node.next_fire, node.channel, node.node_id);
}

void Simulation::erase(const NodeState& node)
{
    queue_.erase(QueueKey{node.next_fire, node.channel, node.node_id});
}

void Simulation::reschedule(NodeState& node, double theta_new)
{
    erase(node);
    node.next_fire = now_ + (1.0 - wrap01(theta_new)) * config_.period_T;
    push(node);
}

void Simulation::jump(NodeState& node, double theta_new)
{
    // A phase pushed to 1 or beyond fires at once; one pushed below 0 waits
    // longer than a period. Wrapping either would add or drop a fire.
    erase(node);
    node.next_fire = now_ + std::max(0.0, 1.0 - theta_new) * config_.period_T;
    push(node);
}

std::size_t Simulation::balance_channels()
{
    const std::size_t channels = config_.channels;
    if (channels < 2)
        return 0;
    std::size_t switches = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t next = (c + 1) % channels;
            if (members_[c].empty())
                continue;
            if (!switch_permitted(members_[c].size(), members_[next].size(),
                                  c + 1 == channels))
                continue;
            const std::size_t mover = *sync_node(c);
            auto& node = nodes_[mover];
            erase(node);
            auto& from = members_[c];
            from.erase(std::find(from.begin(), from.end(), mover));
            members_[next].push_back(mover);
            node.channel = next;
            push(node);
            elect(c);
            elect(next);
            ++switches;
            changed = true;
        }
    }
    last_orders_ = cyclic_orders();
    return switches;
}

FireEvent Simulation::advance_to_next_fire()
{
    if (queue_.empty())
        throw std::logic_error("advance_to_next_fire: empty network");
    const auto [time, channel, id] = *queue_.begin();
    queue_.erase(queue_.begin());
    now_ = std::max(now_, time);
    auto& node = nodes_[id];
    node.next_fire = time + config_.period_T;
    push(node);
    ++fires_;
    return FireEvent{time, id, channel};
}

bool Simulation::apply_message_loss(const FireEvent& event, NodeState& listener)
{
    bool delivered = true;
    if (!config_.adjacency.empty() && !config_.adjacency[listener.node_id][event.node_id])
        delivered = false;
    else if (config_.loss_probability > 0.0)
        delivered = uniform() >= config_.loss_probability;

    if (delivered)
        listener.miss_counter = 0;
    else
        ++listener.miss_counter;
    listener.full_listening = listener.miss_counter >= config_.consecutive_miss_threshold;
    return delivered;
}

double Simulation::cached_theta(const NodeState& listener, std::size_t other) const
{
    return wrap01((now_ - listener.last_heard[other].time) / config_.period_T);
}

bool Simulation::believes_next(const NodeState& listener, std::size_t firer) const
{
    const double own = theta(listener.node_id);
    for (std::size_t w : members_[listener.channel]) {
        if (w == listener.node_id || w == firer)
            continue;
        const auto& heard = listener.last_heard[w];
        if (!heard.valid() || heard.channel != listener.channel)
            continue;
        if (cached_theta(listener, w) > own)
            return false;
    }
    return true;
}

double Simulation::apply_momentum(NodeState& node, double theta_new, double own)
{
    if (!config_.nesterov)
        return theta_new;
    const double grid = now_ / config_.period_T;
    const double offset = wrap01(theta_new - grid);
    auto& mem = node.nesterov_memory;
    if (!mem)
        mem = NesterovMemory{offset, 0};
    std::size_t k = mem->k + 1;
    const double step = circular(offset - mem->prev_offset);
    // Live updates are sequential, so the round map is not symmetric and
    // unbounded momentum can build up. Restart when the update opposes the
    // momentum direction.
    if (config_.staleness_mode == StalenessMode::live && step * circular(theta_new - own) < 0.0)
        k = 1;
    mem->prev_offset = offset;
    mem->k = k;
    return theta_new + momentum_weight(k) * step;
}

void Simulation::on_fire_desync_update(NodeState& listener, const FireEvent& event)
{
    const double own = theta(listener.node_id);
    // Successor: the announced phase closest below our own. The firer itself
    // sits at 0 and is the fallback when nobody else has been heard.
    double successor = 0.0;
    for (std::size_t w : members_[listener.channel]) {
        if (w == listener.node_id || w == event.node_id)
            continue;
        const auto& heard = listener.last_heard[w];
        if (!heard.valid() || heard.channel != listener.channel)
            continue;
        const double p = cached_theta(listener, w);
        if (p <= own)
            successor = std::max(successor, p);
    }
    const double updated = desync_phase_update(own, successor, config_.alpha);
    jump(listener, apply_momentum(listener, updated, own));
}

bool Simulation::sync_holds(std::size_t channel) const
{
    return config_.sync_rule == SyncRule::anchored && channel + 1 == config_.channels;
}

void Simulation::on_fire_sync_update(NodeState& listener, const FireEvent& event)
{
    (void)event;
    if (sync_holds(listener.channel))
        return;
    const double own = theta(listener.node_id);
    if (config_.sync_rule == SyncRule::inhibitory) {
        jump(listener, (1.0 - config_.gamma) * own + config_.gamma);
        return;
    }
    // The firer sits at phase 0, so the offset gap to it is own modulo 1.
    jump(listener, own - config_.gamma * circular(own));
}

void Simulation::deliver(const FireEvent& event)
{
    const auto& firer = nodes_[event.node_id];
    const std::size_t c = firer.channel;
    const HeardFire message{event.time, c, firer.role, members_[c].size()};
    const bool live = config_.staleness_mode == StalenessMode::live;
    const bool warmed_up = now_ >= config_.period_T;

    std::vector<std::size_t> receivers;
    for (std::size_t w : members_[c]) {
        if (w == event.node_id)
            continue;
        auto& listener = nodes_[w];
        if (!apply_message_loss(event, listener))
            continue;
        listener.last_heard[event.node_id] = message;
        receivers.push_back(w);
    }

    const std::size_t channels = config_.channels;
    if (channels >= 2 && firer.role == Role::sync) {
        const std::size_t prev = (c + channels - 1) % channels;
        if (auto monitor = sync_node(prev); monitor && *monitor != event.node_id) {
            auto& listener = nodes_[*monitor];
            if (apply_message_loss(event, listener)) {
                listener.last_heard[event.node_id] = message;
                if (live)
                    on_fire_sync_update(listener, event);
            }
        }
    }

    if (!live || !warmed_up)
        return;
    std::vector<std::size_t> movers;
    for (std::size_t w : receivers) {
        const auto& listener = nodes_[w];
        if (listener.role == Role::desync && believes_next(listener, event.node_id))
            movers.push_back(w);
    }
    for (std::size_t w : movers)
        on_fire_desync_update(nodes_[w], event);
}

void Simulation::round_boundary()
{
    const double boundary = static_cast<double>(round_ + 1) * config_.period_T;
    now_ = std::max(now_, boundary);
    if (config_.staleness_mode == StalenessMode::assumption1) {
        std::vector<std::pair<std::size_t, double>> pending;
        for (std::size_t c = 0; c < config_.channels; ++c) {
            for (std::size_t id : members_[c]) {
                const auto& node = nodes_[id];
                const double own = theta(id);
                if (node.role == Role::sync) {
                    if (sync_holds(c))
                        continue;
                    const std::size_t next = (c + 1) % config_.channels;
                    const auto target = sync_node(next);
                    if (!target || !node.last_heard[*target].valid())
                        continue;
                    const double other = cached_theta(node, *target);
                    pending.emplace_back(id, own + config_.gamma * circular(other - own));
                    continue;
                }
                double up = 2.0, down = 2.0;
                for (std::size_t w : members_[c]) {
                    if (w == id)
                        continue;
                    const auto& heard = node.last_heard[w];
                    if (!heard.valid() || heard.channel != c)
                        continue;
                    const double p = cached_theta(node, w);
                    const double above = wrap01(p - own);
                    const double below = wrap01(own - p);
                    up = std::min(up, above == 0.0 ? 1.0 : above);
                    down = std::min(down, below == 0.0 ? 1.0 : below);
                }
                if (up > 1.0)
                    continue;
                const double pred = own + up;
                const double succ = own - down;
                const double updated =
                    (1.0 - config_.alpha) * own + config_.alpha * (pred + succ) / 2.0;
                pending.emplace_back(id, wrap01(updated));
            }
        }
        for (auto& [id, value] : pending) {
            auto& node = nodes_[id];
            const double moved = node.role == Role::sync ? value : apply_momentum(node, value, theta(id));
            reschedule(node, wrap01(moved));
        }
    }
    ++round_;
}

TraceRecord Simulation::run_round()
{
    const double boundary = static_cast<double>(round_ + 1) * config_.period_T;
    while (!queue_.empty() &&
           std::get<0>(*queue_.begin()) <= boundary + boundary_slack * config_.period_T) {
        deliver(advance_to_next_fire());
    }
    round_boundary();
    TraceRecord rec = snapshot();
    auto orders = cyclic_orders();
    for (std::size_t c = 0; c < orders.size() && c < last_orders_.size(); ++c)
        if (orders[c] != last_orders_[c])
            ++rec.order_changes;
    last_orders_ = std::move(orders);
    return rec;
}

std::vector<std::vector<std::size_t>> Simulation::cyclic_orders() const
{
    std::vector<std::vector<std::size_t>> orders;
    for (std::size_t c = 0; c < config_.channels; ++c) {
        std::vector<std::size_t> ids = members_[c];
        std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
            const double ta = theta(a), tb = theta(b);
            return ta != tb ? ta < tb : a < b;
        });
        if (!ids.empty()) {
            auto lowest = std::min_element(ids.begin(), ids.end());
            std::rotate(ids.begin(), lowest, ids.end());
        }
        orders.push_back(std::move(ids));
    }
    return orders;
}

TraceRecord Simulation::snapshot() const
{
    TraceRecord rec;
    rec.round = round_;
    rec.sim_time = now_;
    rec.occupancy = occupancy();
    rec.node_offsets.resize(nodes_.size());
    for (std::size_t id = 0; id < nodes_.size(); ++id)
        rec.node_offsets[id] = theta(id);

    const std::size_t channels = config_.channels;
    std::vector<std::optional<double>> sync_offsets(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        const auto& ids = members_[c];
        std::vector<double> phases;
        for (std::size_t id : ids)
            phases.push_back(rec.node_offsets[id]);
        std::vector<double> vec;
        if (!phases.empty()) {
            const auto anchor = sync_node(c);
            double base = 0.0;
            if (anchor) {
                base = rec.node_offsets[*anchor];
                sync_offsets[c] = base;
            } else {
                base = *std::min_element(phases.begin(), phases.end());
            }
            std::vector<double> rel;
            bool skipped = false;
            for (std::size_t i = 0; i < ids.size(); ++i) {
                if (!skipped && (anchor ? ids[i] == *anchor : phases[i] == base)) {
                    skipped = true;
                    continue;
                }
                rel.push_back(wrap01(phases[i] - base));
            }
            std::sort(rel.begin(), rel.end());
            vec.push_back(base);
            for (double r : rel)
                vec.push_back(base + r);
        }
        if (vec.size() >= 2)
            rec.objective += desync_objective(vec);
        rec.channel_offsets.push_back(std::move(vec));
    }
    if (channels >= 2) {
        for (std::size_t c = 0; c < channels; ++c) {
            const auto& a = sync_offsets[c];
            const auto& b = sync_offsets[(c + 1) % channels];
            if (a && b) {
                const double d = circular(*b - *a);
                rec.objective += 0.5 * d * d;
            }
        }
    }
    rec.converged = rec.objective <= config_.epsilon;
    return rec;
}

double Simulation::objective_now() const { return snapshot().objective; }

std::size_t Simulation::slot_index(std::size_t id) const
{
    const auto& node = nodes_.at(id);
    const auto anchor = sync_node(node.channel);
    const double base =
        anchor ? theta(*anchor) : theta(elect_sync_node(members_[node.channel]));
    const double mine = wrap01(theta(id) - base);
    std::size_t rank = 0;
    for (std::size_t w : members_[node.channel]) {
        if (w == id)
            continue;
        const double other = wrap01(theta(w) - base);
        if (other < mine || (other == mine && w < id))
            ++rank;
    }
    return rank;
}

SwapOutcome Simulation::swap_channels(std::size_t a, std::size_t b)
{
    if (a >= nodes_.size() || b >= nodes_.size() || a == b)
        return {false, "invalid node pair"};
    const std::size_t channels = config_.channels;
    const std::size_t ca = nodes_[a].channel, cb = nodes_[b].channel;
    if (channels < 2 || ca == cb || ((ca + 1) % channels != cb && (cb + 1) % channels != ca))
        return {false, "nodes are not in adjacent channels"};
    if (objective_now() > config_.epsilon)
        return {false, "network has not converged"};
    if (slot_index(a) != slot_index(b))
        return {false, "nodes occupy different slots"};
    const double gap = std::abs(circular(theta(a) - theta(b))) * config_.period_T;
    if (gap > config_.guard_time)
        return {false, "nodes do not fire synchronously"};

    auto& na = nodes_[a];
    auto& nb = nodes_[b];
    erase(na);
    erase(nb);
    std::swap(na.channel, nb.channel);
    std::swap(na.next_fire, nb.next_fire);
    std::swap(na.role, nb.role);
    std::swap(na.nesterov_memory, nb.nesterov_memory);
    std::swap(na.miss_counter, nb.miss_counter);
    std::swap(na.full_listening, nb.full_listening);
    std::swap(na.last_heard, nb.last_heard);
    for (auto& node : nodes_)
        std::swap(node.last_heard[a], node.last_heard[b]);
    for (auto* list : {&members_[ca], &members_[cb]}) {
        for (auto& id : *list) {
            if (id == a)
                id = b;
            else if (id == b)
                id = a;
        }
        std::sort(list->begin(), list->end());
    }
    push(na);
    push(nb);
    last_orders_ = cyclic_orders();
    return {true, {}};
}

SimulationResult run_simulation(const SimConfig& config)
{
    Simulation sim(config);
    SimulationResult result;
    result.balancing_switches = config.balance ? sim.balance_channels() : 0;
    const double max_time =
        config.max_time > 0.0 ? config.max_time : default_periods * config.period_T;

    auto record = [&](TraceRecord rec) {
        if (config.keep_trace)
            result.trace.push_back(std::move(rec));
    };

    TraceRecord first = sim.snapshot();
    auto& report = result.report;
    report.final_objective = first.objective;
    report.converged = first.converged;
    record(std::move(first));

    std::size_t max_rounds = static_cast<std::size_t>(std::floor(
        max_time / config.period_T + boundary_slack));
    while ((!report.converged || !config.stop_at_convergence) && sim.round() < max_rounds) {
        TraceRecord rec = sim.run_round();
        if (config.keep_trace)
            report.trace.push_back(rec.objective);
        if (!report.converged) {
            report.final_objective = rec.objective;
            report.rounds = rec.round;
            report.converged = rec.converged;
        }
        record(std::move(rec));
    }
    result.time_to_convergence = static_cast<double>(report.rounds) * config.period_T;
    result.occupancy = sim.occupancy();
    return result;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace)
{
    out << "round,sim_time_s,objective,occupancy,converged\n";
    for (const auto& rec : trace) {
        std::ostringstream occ;
        for (std::size_t c = 0; c < rec.occupancy.size(); ++c)
            occ << (c ? ";" : "") << rec.occupancy[c];
        std::ostringstream line;
        line << std::setprecision(17) << rec.round << ',' << rec.sim_time << ','
             << rec.objective << ',' << occ.str() << ',' << (rec.converged ? 1 : 0) << '\n';
        out << line.str();
    }
}

}  // namespace desync
