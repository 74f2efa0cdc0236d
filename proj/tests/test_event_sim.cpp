#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "desync/event_sim.hpp"
#include "desync/round_engine.hpp"
#include "oracles.hpp"

using namespace desync;

namespace {

double circ(double x) { return std::abs(x - std::round(x)); }

SimConfig quiet(std::size_t channels, std::size_t nodes, std::uint64_t seed)
{
    SimConfig cfg;
    cfg.channels = channels;
    cfg.nodes = nodes;
    cfg.rng_seed = seed;
    cfg.keep_trace = false;
    return cfg;
}

Simulation converge(SimConfig cfg, double target, std::size_t max_rounds = 20000)
{
    Simulation sim(std::move(cfg));
    sim.balance_channels();
    for (std::size_t r = 0; r < max_rounds && sim.objective_now() > target; ++r)
        sim.run_round();
    return sim;
}

}  // namespace

TEST_CASE("validation")
{
    SimConfig cfg;
    CHECK_NOTHROW(validate(cfg));
    cfg.alpha = 1.0;
    CHECK_THROWS_WITH(validate(cfg), "alpha out of (0,1)");
    cfg = {};
    cfg.gamma = 0.0;
    CHECK_THROWS(validate(cfg));
    cfg = {};
    cfg.loss_probability = 1.0;
    CHECK_THROWS(validate(cfg));
    cfg = {};
    cfg.period_T = 0.0;
    CHECK_THROWS(validate(cfg));
    cfg = {};
    cfg.initial_phases = std::vector<double>{0.1, 0.2};
    CHECK_THROWS(validate(cfg));
    cfg = {};
    cfg.channels = 2;
    cfg.initial_channels = std::vector<std::size_t>{0, 1, 2, 0};
    CHECK_THROWS(validate(cfg));
}

TEST_CASE("fire scheduling")
{
    SimConfig one = quiet(1, 1, 0);
    one.initial_phases = std::vector<double>{0.4};
    Simulation a(one);
    const auto ev = a.advance_to_next_fire();
    CHECK(ev.time == doctest::Approx(0.06).epsilon(1e-12));
    CHECK(a.theta(0) == doctest::Approx(0.0).epsilon(1e-12));

    SimConfig two = quiet(1, 2, 0);
    two.initial_phases = std::vector<double>{0.2, 0.7};
    Simulation b(two);
    const auto first = b.advance_to_next_fire();
    CHECK(first.node_id == 1);
    CHECK(first.time == doctest::Approx(0.03).epsilon(1e-12));

    // a lone node never moves and converges immediately
    one.keep_trace = true;
    const auto res = run_simulation(one);
    CHECK(res.report.converged);
    CHECK(res.report.rounds == 0);
    Simulation c(one);
    double last = c.advance_to_next_fire().time;
    for (int i = 0; i < 20; ++i) {
        const auto e = c.advance_to_next_fire();
        c.deliver(e);
        CHECK(e.time - last == doctest::Approx(0.1).epsilon(1e-12));
        last = e.time;
    }
}

TEST_CASE("equal fire times break ties by channel then id")
{
    SimConfig cfg = quiet(2, 4, 0);
    cfg.initial_phases = std::vector<double>{0.5, 0.5, 0.5, 0.5};
    cfg.initial_channels = std::vector<std::size_t>{1, 0, 1, 0};
    Simulation sim(cfg);
    std::vector<std::size_t> order;
    for (int i = 0; i < 4; ++i)
        order.push_back(sim.advance_to_next_fire().node_id);
    CHECK(order == std::vector<std::size_t>{1, 3, 0, 2});
}

TEST_CASE("phase update rules")
{
    CHECK(desync_phase_update(0.6, 0.1, 0.5) == doctest::Approx(0.575).epsilon(1e-15));
    CHECK(desync_phase_update(0.55, 0.1, 0.7) == doctest::Approx(0.55).epsilon(1e-15));
    CHECK(sync_phase_update(0.5, 0.6) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(sync_phase_update(1.0, 0.6) == 0.0);
    CHECK(sync_phase_update(0.0, 0.6) == doctest::Approx(0.6));
    for (double t = 0.0; t < 1.0; t += 0.01)
        CHECK(sync_phase_update(t, 0.35) >= t);
}

TEST_CASE("sync election and switching rule")
{
    CHECK(elect_sync_node({7, 3, 12}) == 3);
    CHECK(elect_sync_node({5}) == 5);
    CHECK_THROWS(elect_sync_node({}));
    CHECK(switch_permitted(5, 3, false));
    CHECK(switch_permitted(4, 3, false));
    CHECK_FALSE(switch_permitted(4, 3, true));
    CHECK(switch_permitted(5, 3, true));
    CHECK_FALSE(switch_permitted(3, 3, false));

    SimConfig cfg = quiet(3, 7, 1);
    Simulation sim(cfg);
    for (std::size_t c = 0; c < 3; ++c) {
        const auto& ids = sim.channel_members(c);
        if (ids.empty())
            continue;
        REQUIRE(sim.sync_node(c));
        CHECK(*sim.sync_node(c) == *std::min_element(ids.begin(), ids.end()));
        std::size_t syncs = 0;
        for (auto id : ids)
            syncs += sim.node(id).role == Role::sync;
        CHECK(syncs == 1);
    }

    Simulation single(quiet(1, 5, 1));
    CHECK_FALSE(single.sync_node(0));
}

TEST_CASE("channel balancing")
{
    bool saw_fig3 = false;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        for (std::size_t n : {13, 14, 16, 20}) {
            Simulation sim(quiet(4, n, seed));
            sim.balance_channels();
            auto occ = sim.occupancy();
            for (auto k : occ) {
                CHECK(k >= n / 4);
                CHECK(k <= (n + 3) / 4);
            }
            for (std::size_t c = 0; c < 4; ++c)
                if (!sim.channel_members(c).empty())
                    CHECK(sim.sync_node(c));
            std::sort(occ.begin(), occ.end());
            if (n == 14)
                saw_fig3 |= occ == std::vector<std::size_t>{3, 3, 4, 4};
            if (n == 16)
                CHECK(occ == std::vector<std::size_t>{4, 4, 4, 4});
        }
    }
    CHECK(saw_fig3);

    // everyone starts in one channel
    SimConfig cfg = quiet(4, 14, 3);
    cfg.initial_channels = std::vector<std::size_t>(14, 2);
    Simulation sim(cfg);
    CHECK(sim.balance_channels() > 0);
    auto occ = sim.occupancy();
    std::sort(occ.begin(), occ.end());
    CHECK(occ == std::vector<std::size_t>{3, 3, 4, 4});
}

TEST_CASE("message loss and miss counter")
{
    SimConfig cfg = quiet(1, 3, 77);
    cfg.loss_probability = 0.3;
    Simulation sim(cfg);
    NodeState listener = sim.node(1);
    const FireEvent ev{0.0, 0, 0};
    int delivered = 0;
    for (int i = 0; i < 10000; ++i)
        delivered += sim.apply_message_loss(ev, listener);
    CHECK(std::abs(delivered / 10000.0 - 0.7) < 0.01);

    SimConfig clean = quiet(1, 3, 77);
    Simulation always(clean);
    NodeState l2 = always.node(1);
    for (int i = 0; i < 100; ++i)
        CHECK(always.apply_message_loss(ev, l2));

    SimConfig hidden = quiet(1, 3, 5);
    hidden.loss_probability = 0.5;
    hidden.adjacency = std::vector<std::vector<bool>>(3, std::vector<bool>(3, true));
    hidden.adjacency[1][0] = false;
    Simulation h(hidden);
    NodeState l3 = h.node(1);
    for (std::size_t i = 1; i <= 25; ++i) {
        CHECK_FALSE(h.apply_message_loss(ev, l3));
        CHECK(l3.miss_counter == i);
        CHECK(l3.full_listening == (i >= 10));
    }
    hidden.loss_probability = 0.0;
    Simulation h0(hidden);
    NodeState l4 = h0.node(1);
    for (int i = 0; i < 9; ++i)
        h0.apply_message_loss(ev, l4);
    CHECK_FALSE(l4.full_listening);
    CHECK(h0.apply_message_loss(FireEvent{0.0, 2, 0}, l4));
    CHECK(l4.miss_counter == 0);
    CHECK_FALSE(l4.full_listening);
}

TEST_CASE("hidden-node adjacency")
{
    const auto adj = hidden_node_adjacency(64, 20, 4, 123);
    std::size_t hidden_rows = 0;
    for (std::size_t u = 0; u < 64; ++u) {
        const auto missing = std::count(adj[u].begin(), adj[u].end(), false);
        CHECK((missing == 0 || missing == 4));
        CHECK(adj[u][u]);
        hidden_rows += missing == 4;
    }
    CHECK(hidden_rows == 20);
    CHECK(hidden_node_adjacency(64, 20, 4, 123) == adj);
    CHECK_THROWS(hidden_node_adjacency(4, 5, 1, 0));
}

TEST_CASE("assumption1 mode reproduces the round engine")
{
    std::mt19937_64 rng(606);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + trial % 9;
        const double alpha = 0.05 + 0.9 * oracle::uniform_vector(rng, 1)[0];
        auto phases = oracle::uniform_vector(rng, n);

        SimConfig cfg = quiet(1, n, 0);
        cfg.alpha = alpha;
        cfg.staleness_mode = StalenessMode::assumption1;
        cfg.initial_phases = phases;
        Simulation sim(cfg);

        std::sort(phases.begin(), phases.end());
        DesyncState state{PhaseVector(phases), 0};
        const SingleChannelProblem p(n, alpha, 1e-3);
        for (int r = 0; r < 60; ++r) {
            const auto rec = sim.run_round();
            state = desync_round(state, p);
            for (std::size_t i = 0; i < n; ++i) {
                double best = 1.0;
                for (double s : rec.node_offsets)
                    best = std::min(best, circ(s - state.phi[i]));
                CHECK(best < 1e-9);
            }
        }
    }
}

TEST_CASE("live mode tracks the round engine on average")
{
    std::mt19937_64 rng(1);
    const SingleChannelProblem p(4, 0.5, 1e-3);
    double sim_total = 0.0, engine_total = 0.0;
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
        SimConfig cfg = quiet(1, 4, seed);
        cfg.alpha = 0.5;
        cfg.epsilon = 1e-3;
        const auto res = run_simulation(cfg);
        CHECK(res.report.converged);
        // the first round only discovers neighbours; nobody can update yet
        sim_total += static_cast<double>(res.report.rounds) - 1.0;

        auto x = oracle::uniform_vector(rng, 4);
        std::sort(x.begin(), x.end());
        DesyncState s{PhaseVector(x), 0};
        engine_total += static_cast<double>(
            run_until_convergence(s, p, {1e-3, default_max_rounds(p), false}).rounds);
    }
    MESSAGE("live mean " << sim_total / 400 << ", engine mean " << engine_total / 400);
    CHECK(std::abs(sim_total - engine_total) / engine_total <= 0.10);
}

TEST_CASE("steady state spacing and order preservation")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        for (bool nesterov : {false, true}) {
            SimConfig cfg = quiet(3, 12, seed);
            cfg.alpha = 0.5;
            cfg.nesterov = nesterov;
            Simulation sim = converge(cfg, 1e-12);
            REQUIRE(sim.objective_now() <= 1e-6);
            std::size_t changes = 0;
            for (int r = 0; r < 5; ++r)
                changes += sim.run_round().order_changes;
            CHECK(changes == 0);

            std::vector<std::vector<double>> times(3);
            std::vector<double> sync_times;
            for (std::size_t k = 0; k < 12 * 3; ++k) {
                const auto ev = sim.advance_to_next_fire();
                sim.deliver(ev);
                times[ev.channel].push_back(ev.time);
                if (sim.node(ev.node_id).role == Role::sync)
                    sync_times.push_back(ev.time);
            }
            for (std::size_t c = 0; c < 3; ++c) {
                const double n = static_cast<double>(sim.channel_members(c).size());
                for (std::size_t i = 1; i < times[c].size(); ++i)
                    CHECK(std::abs(times[c][i] - times[c][i - 1] - 0.1 / n) < 0.1 * 1e-4);
            }
            for (std::size_t i = 0; i < 3; ++i)
                CHECK(circ((sync_times[i] - sync_times[0]) / 0.1) < 1e-4);
        }
    }

    for (std::uint64_t seed = 10; seed < 40; ++seed) {
        SimConfig cfg = quiet(1, 2 + seed % 9, seed);
        cfg.alpha = 0.05 + 0.03 * static_cast<double>(seed % 30);
        cfg.keep_trace = true;
        cfg.stop_at_convergence = false;
        cfg.max_time = 100 * cfg.period_T;
        const auto res = run_simulation(cfg);
        for (const auto& rec : res.trace)
            CHECK(rec.order_changes == 0);
    }
}

TEST_CASE("closed Sync ring can lock into a travelling wave")
{
    SimConfig cfg = quiet(3, 12, 0);
    cfg.sync_rule = SyncRule::offset_consensus;
    Simulation ring = converge(cfg, 1e-9, 3000);
    CHECK(ring.objective_now() > 0.1);

    cfg.sync_rule = SyncRule::anchored;
    CHECK(converge(cfg, 1e-9, 3000).objective_now() <= 1e-9);
}

TEST_CASE("determinism")
{
    SimConfig cfg = quiet(3, 11, 4242);
    cfg.keep_trace = true;
    cfg.loss_probability = 0.1;
    cfg.nesterov = true;
    std::ostringstream a, b;
    write_trace_csv(a, run_simulation(cfg).trace);
    write_trace_csv(b, run_simulation(cfg).trace);
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("round,sim_time_s,objective,occupancy,converged\n", 0) == 0);
    cfg.rng_seed = 4243;
    std::ostringstream c;
    write_trace_csv(c, run_simulation(cfg).trace);
    CHECK(a.str() != c.str());
}

TEST_CASE("max_time exceeded reports non-convergence")
{
    SimConfig cfg = quiet(1, 8, 2);
    cfg.epsilon = 1e-14;
    cfg.alpha = 0.05;
    cfg.max_time = 3 * cfg.period_T;
    const auto res = run_simulation(cfg);
    CHECK_FALSE(res.report.converged);
    CHECK(res.report.rounds == 3);
}

TEST_CASE("channel swaps in steady state")
{
    SimConfig cfg = quiet(2, 6, 8);
    cfg.initial_channels = std::vector<std::size_t>{0, 0, 0, 1, 1, 1};
    cfg.epsilon = 1e-6;
    Simulation sim = converge(cfg, 1e-14);
    REQUIRE(sim.objective_now() <= 1e-6);

    auto pair_at = [&](std::size_t slot) -> std::pair<std::size_t, std::size_t> {
        std::size_t a = 99, b = 99;
        for (auto id : sim.channel_members(0))
            if (sim.slot_index(id) == slot)
                a = id;
        for (auto id : sim.channel_members(1))
            if (sim.slot_index(id) == slot)
                b = id;
        return {a, b};
    };

    const auto [a, b] = pair_at(2);
    const double before = sim.objective_now();
    const auto ok = sim.swap_channels(a, b);
    CHECK(ok.accepted);
    CHECK(std::abs(sim.objective_now() - before) < 1e-12);
    CHECK(sim.node(a).channel == 1);
    CHECK(sim.node(b).channel == 0);

    const auto [c, d] = pair_at(1);
    const auto bad = sim.swap_channels(a, d == b ? a : d);
    CHECK_FALSE(bad.accepted);
    const auto same = sim.swap_channels(sim.channel_members(0)[0], sim.channel_members(0)[1]);
    CHECK_FALSE(same.accepted);
    (void)c;

    std::mt19937_64 rng(5);
    for (int r = 0; r < 100; ++r) {
        const auto [x, y] = pair_at(rng() % 3);
        const double was = sim.objective_now();
        REQUIRE(sim.swap_channels(x, y).accepted);
        CHECK(std::abs(sim.objective_now() - was) < 1e-12);
        CHECK(sim.run_round().objective <= 1e-6);
    }
}
