#pragma once

#include <optional>

#include "desync/phase_vector.hpp"
#include "desync/problem.hpp"

namespace desync {

// Worst-case squared distance to the solution set over starts in [0,1]^n:
// (3.5 n^2 + 3 n + 4) / (3 n).
double worst_case_distance_sq(std::size_t n);

// Squared distance from phi0 to {phi_ref + z 1}, phi_ref = (0, 1/n, ..., (n-1)/n).
double solution_distance(const PhaseVector& phi0, const SingleChannelProblem& problem);

// Rounds needed by Desync from a known start: distance_sq is solution_distance(phi0),
// g0 is objective_g(phi0). Returns 0 when g0 <= epsilon.
double desync_round_bound(const SingleChannelProblem& problem, double distance_sq, double g0);

// Worst case over all starts. Without g0 the 1/g0 term is dropped.
double desync_round_bound_worst_case(const SingleChannelProblem& problem,
                                     std::optional<double> g0 = std::nullopt);

struct FastBound {
    double rounds;
    // false when alpha is outside (0, 1/2]; the value is still computed.
    bool guaranteed;
};

// Rounds needed by Fast-Desync from a start at `distance` (not squared) from the
// solution set. A supplied g0 <= epsilon short-circuits to 0.
FastBound fast_desync_round_bound(const SingleChannelProblem& problem, double distance,
                                  std::optional<double> g0 = std::nullopt);

FastBound fast_desync_round_bound_worst_case(const SingleChannelProblem& problem);

}  // namespace desync
