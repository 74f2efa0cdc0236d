#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "desync/phase_vector.hpp"
#include "desync/problem.hpp"

namespace desync {

struct DesyncState {
    PhaseVector phi;
    std::size_t k = 0;
};

struct NesterovState {
    PhaseVector phi;
    PhaseVector phi_prev;
    PhaseVector mu;
    std::size_t k = 0;

    static NesterovState start(PhaseVector phi0);
};

// Momentum memory of one channel. mu[0] always mirrors phi[0]: the Sync
// coordinate carries no momentum.
struct ChannelMomentum {
    PhaseVector phi_prev;
    PhaseVector mu;
};

struct MultichannelState {
    PhaseSet phis;
    std::optional<std::vector<ChannelMomentum>> nesterov;
    std::size_t k = 0;

    static MultichannelState plain(PhaseSet phis);
    static MultichannelState accelerated(PhaseSet phis);
};

struct ConvergenceReport {
    std::size_t rounds = 0;
    double final_objective = 0.0;
    std::vector<double> trace;
    bool converged = false;
};

struct RunLimits {
    double epsilon;
    std::size_t max_rounds;
    bool keep_trace = true;
};

// Thrown when an iterate stops being finite.
class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Momentum weight (k-1)/(k+2) of update k (k >= 1).
double momentum_weight(std::size_t k);

// One synchronous Desync round on raw offsets.
std::vector<double> desync_step(const std::vector<double>& phi, double alpha);

DesyncState desync_round(const DesyncState& state, const SingleChannelProblem& problem);
NesterovState fast_desync_round(const NesterovState& state, const SingleChannelProblem& problem);
MultichannelState much_round(const MultichannelState& state, const MultichannelProblem& problem);
MultichannelState fast_much_round(const MultichannelState& state,
                                  const MultichannelProblem& problem);

// Ten times the worst-case Desync bound.
std::size_t default_max_rounds(const SingleChannelProblem& problem);
// Same rule applied to the largest channel.
std::size_t default_max_rounds(const MultichannelProblem& problem, double epsilon);

// The state argument is advanced in place to the last computed iterate.
ConvergenceReport run_until_convergence(DesyncState& state, const SingleChannelProblem& problem,
                                        const RunLimits& limits);
ConvergenceReport run_until_convergence(NesterovState& state, const SingleChannelProblem& problem,
                                        const RunLimits& limits);
// Uses fast_much_round when the state has momentum memory, much_round otherwise.
ConvergenceReport run_until_convergence(MultichannelState& state,
                                        const MultichannelProblem& problem,
                                        const RunLimits& limits);

// Shared loop: evaluates the objective once per round and stops at the first
// round at or below epsilon.
template <class State, class Step, class Objective>
ConvergenceReport iterate_until(State& state, Step step, Objective objective,
                                const RunLimits& limits)
{
    if (limits.max_rounds < 1)
        throw std::invalid_argument("max_rounds must be >= 1");
    ConvergenceReport report;
    double value = objective(state);
    if (!std::isfinite(value))
        throw NonFiniteError("non-finite objective at round 0");
    while (value > limits.epsilon && report.rounds < limits.max_rounds) {
        state = step(state);
        ++report.rounds;
        value = objective(state);
        if (!std::isfinite(value))
            throw NonFiniteError("non-finite objective at round " +
                                 std::to_string(report.rounds));
        if (limits.keep_trace)
            report.trace.push_back(value);
    }
    report.final_objective = value;
    report.converged = value <= limits.epsilon;
    return report;
}

}  // namespace desync
