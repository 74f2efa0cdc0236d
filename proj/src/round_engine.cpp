#include "desync/round_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "desync/bounds.hpp"
#include "desync/objectives.hpp"

namespace desync {

namespace {

void check_length(const PhaseVector& phi, std::size_t n)
{
    if (phi.size() != n)
        throw std::invalid_argument("phase vector length " + std::to_string(phi.size()) +
                                    " does not match n = " + std::to_string(n));
}

void check_channels(const PhaseSet& phis, const MultichannelProblem& problem)
{
    if (phis.size() != problem.channels())
        throw std::invalid_argument("state has " + std::to_string(phis.size()) +
                                    " channels, problem has " +
                                    std::to_string(problem.channels()));
    for (std::size_t c = 0; c < phis.size(); ++c)
        check_length(phis[c], problem.count(c));
}

// Sync coordinates move toward the next channel's Sync coordinate; the other
// coordinates take the Desync step inside their channel, anchored on the Sync node.
PhaseSet much_step(const PhaseSet& src, double beta, double gamma)
{
    const std::size_t channels = src.size();
    PhaseSet out;
    out.reserve(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        const auto& x = src[c].vec();
        const std::size_t n = x.size();
        std::vector<double> y(n);
        y[0] = (1.0 - gamma) * x[0] + gamma * src[(c + 1) % channels][0];
        for (std::size_t i = 1; i < n; ++i) {
            const double right = (i + 1 < n) ? x[i + 1] : x[0] + 1.0;
            y[i] = (1.0 - 2.0 * beta) * x[i] + beta * (x[i - 1] + right);
        }
        out.emplace_back(std::move(y));
    }
    return out;
}

double bound_rounds_to_limit(double bound)
{
    const double scaled = std::ceil(10.0 * bound);
    if (!(scaled < 1e15))
        return 1e15;
    return std::max(scaled, 1.0);
}

}  // namespace

NesterovState NesterovState::start(PhaseVector phi0)
{
    return NesterovState{phi0, phi0, phi0, 0};
}

MultichannelState MultichannelState::plain(PhaseSet phis)
{
    return MultichannelState{std::move(phis), std::nullopt, 0};
}

MultichannelState MultichannelState::accelerated(PhaseSet phis)
{
    std::vector<ChannelMomentum> mem;
    mem.reserve(phis.size());
    for (const auto& p : phis)
        mem.push_back({p, p});
    return MultichannelState{std::move(phis), std::move(mem), 0};
}

double momentum_weight(std::size_t k)
{
    if (k < 1)
        throw std::invalid_argument("momentum weight needs k >= 1");
    const double kk = static_cast<double>(k);
    return (kk - 1.0) / (kk + 2.0);
}

std::vector<double> desync_step(const std::vector<double>& phi, double alpha)
{
    const std::size_t n = phi.size();
    const double half = alpha / 2.0;
    std::vector<double> out(n);
    out[0] = (1.0 - alpha) * phi[0] + half * (phi[1] + phi[n - 1] - 1.0);
    for (std::size_t i = 1; i + 1 < n; ++i)
        out[i] = (1.0 - alpha) * phi[i] + half * (phi[i - 1] + phi[i + 1]);
    out[n - 1] = (1.0 - alpha) * phi[n - 1] + half * (phi[n - 2] + phi[0] + 1.0);
    return out;
}

DesyncState desync_round(const DesyncState& state, const SingleChannelProblem& problem)
{
    check_length(state.phi, problem.n());
    return DesyncState{PhaseVector(desync_step(state.phi.vec(), problem.alpha())), state.k + 1};
}

NesterovState fast_desync_round(const NesterovState& state, const SingleChannelProblem& problem)
{
    check_length(state.phi, problem.n());
    check_length(state.mu, problem.n());
    const std::size_t k = state.k + 1;
    const double m = momentum_weight(k);
    auto phi = desync_step(state.mu.vec(), problem.alpha());
    // The exact step has zero mean. Rounding leaves a small common velocity that
    // momentum near 1 never damps, so it is removed.
    std::vector<double> step(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i)
        step[i] = phi[i] - state.phi[i];
    const double drift = std::accumulate(step.begin(), step.end(), 0.0) /
                         static_cast<double>(step.size());
    std::vector<double> mu(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i)
        mu[i] = phi[i] + m * (step[i] - drift);
    return NesterovState{PhaseVector(std::move(phi)), state.phi, PhaseVector(std::move(mu)), k};
}

MultichannelState much_round(const MultichannelState& state, const MultichannelProblem& problem)
{
    check_channels(state.phis, problem);
    MultichannelState next = state;
    next.phis = much_step(state.phis, problem.beta(), problem.gamma());
    next.nesterov.reset();
    next.k = state.k + 1;
    return next;
}

MultichannelState fast_much_round(const MultichannelState& state,
                                  const MultichannelProblem& problem)
{
    check_channels(state.phis, problem);
    if (!state.nesterov)
        throw std::invalid_argument("fast_much_round needs momentum memory");
    const auto& mem = *state.nesterov;
    const std::size_t k = state.k + 1;
    const double m = momentum_weight(k);

    PhaseSet lookahead;
    lookahead.reserve(mem.size());
    for (const auto& ch : mem)
        lookahead.push_back(ch.mu);
    PhaseSet stepped = much_step(lookahead, problem.beta(), problem.gamma());

    std::vector<ChannelMomentum> next_mem;
    next_mem.reserve(mem.size());
    for (std::size_t c = 0; c < stepped.size(); ++c) {
        const auto& now = stepped[c].vec();
        const auto& before = state.phis[c].vec();
        std::vector<double> mu(now.size());
        mu[0] = now[0];
        for (std::size_t i = 1; i < now.size(); ++i)
            mu[i] = now[i] + m * (now[i] - before[i]);
        next_mem.push_back({state.phis[c], PhaseVector(std::move(mu))});
    }
    return MultichannelState{std::move(stepped), std::move(next_mem), k};
}

std::size_t default_max_rounds(const SingleChannelProblem& problem)
{
    return static_cast<std::size_t>(
        bound_rounds_to_limit(desync_round_bound_worst_case(problem)));
}

std::size_t default_max_rounds(const MultichannelProblem& problem, double epsilon)
{
    const auto& counts = problem.channel_counts();
    const std::size_t n = *std::max_element(counts.begin(), counts.end());
    return default_max_rounds(SingleChannelProblem(n, beta_to_alpha(problem.beta()), epsilon));
}

ConvergenceReport run_until_convergence(DesyncState& state, const SingleChannelProblem& problem,
                                        const RunLimits& limits)
{
    check_length(state.phi, problem.n());
    return iterate_until(
        state, [&](const DesyncState& s) { return desync_round(s, problem); },
        [](const DesyncState& s) { return desync_objective(s.phi.values()); }, limits);
}

ConvergenceReport run_until_convergence(NesterovState& state, const SingleChannelProblem& problem,
                                        const RunLimits& limits)
{
    check_length(state.phi, problem.n());
    return iterate_until(
        state, [&](const NesterovState& s) { return fast_desync_round(s, problem); },
        [](const NesterovState& s) { return desync_objective(s.phi.values()); }, limits);
}

ConvergenceReport run_until_convergence(MultichannelState& state,
                                        const MultichannelProblem& problem,
                                        const RunLimits& limits)
{
    check_channels(state.phis, problem);
    auto objective = [&](const MultichannelState& s) { return objective_h(s.phis, problem); };
    if (state.nesterov)
        return iterate_until(
            state, [&](const MultichannelState& s) { return fast_much_round(s, problem); },
            objective, limits);
    return iterate_until(
        state, [&](const MultichannelState& s) { return much_round(s, problem); }, objective,
        limits);
}

}  // namespace desync
