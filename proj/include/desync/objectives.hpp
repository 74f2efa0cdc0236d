#pragma once

#include <cstddef>
#include <span>

#include "desync/phase_vector.hpp"
#include "desync/problem.hpp"

namespace desync {

// g(phi) = 1/2 ||D phi - (1/n) 1 + e_n||^2
double objective_g(const PhaseVector& phi, const SingleChannelProblem& problem);

// Same quantity on raw offsets; the spacing is taken from the length.
double desync_objective(std::span<const double> phi);

// D^T D phi + d
PhaseVector gradient_g(const PhaseVector& phi, const SingleChannelProblem& problem);

// h = sum_c g_c(phi_c) + 1/2 sum_c (phi_{c+1,1} - phi_{c,1})^2, channels cyclic.
double objective_h(const PhaseSet& phis, const MultichannelProblem& problem);

PhaseVector gradient_h_channel(std::size_t c, const PhaseSet& phis,
                               const MultichannelProblem& problem);

}  // namespace desync
