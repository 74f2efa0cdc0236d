#include "desync/objectives.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace desync {

namespace {

void check_length(std::size_t got, std::size_t want, const char* what)
{
    if (got != want)
        throw std::invalid_argument(std::string(what) + ": expected length " +
                                    std::to_string(want) + ", got " + std::to_string(got));
}

void check_channels(const PhaseSet& phis, const MultichannelProblem& problem)
{
    if (phis.size() != problem.channels())
        throw std::invalid_argument("expected " + std::to_string(problem.channels()) +
                                    " channels, got " + std::to_string(phis.size()));
    for (std::size_t c = 0; c < phis.size(); ++c)
        check_length(phis[c].size(), problem.count(c), "channel phase vector");
}

// Cyclic Laplacian of the ring plus the wrap term d = (1, 0, ..., 0, -1).
std::vector<double> ring_gradient(std::span<const double> x)
{
    const std::size_t n = x.size();
    std::vector<double> grad(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double left = x[(i + n - 1) % n];
        const double right = x[(i + 1) % n];
        grad[i] = 2.0 * x[i] - left - right;
    }
    grad.front() += 1.0;
    grad.back() -= 1.0;
    return grad;
}

}  // namespace

double desync_objective(std::span<const double> phi)
{
    const std::size_t n = phi.size();
    const double v = 1.0 / static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double r = phi[i + 1] - phi[i] - v;
        acc += r * r;
    }
    const double wrap = phi[0] - phi[n - 1] - v + 1.0;
    acc += wrap * wrap;
    return 0.5 * acc;
}

double objective_g(const PhaseVector& phi, const SingleChannelProblem& problem)
{
    check_length(phi.size(), problem.n(), "objective_g");
    return desync_objective(phi.values());
}

PhaseVector gradient_g(const PhaseVector& phi, const SingleChannelProblem& problem)
{
    check_length(phi.size(), problem.n(), "gradient_g");
    return PhaseVector(ring_gradient(phi.values()));
}

double objective_h(const PhaseSet& phis, const MultichannelProblem& problem)
{
    check_channels(phis, problem);
    double total = 0.0;
    for (const auto& phi : phis)
        total += desync_objective(phi.values());
    for (std::size_t c = 0; c < phis.size(); ++c) {
        const double diff = phis[problem.next(c)][0] - phis[c][0];
        total += 0.5 * diff * diff;
    }
    return total;
}

PhaseVector gradient_h_channel(std::size_t c, const PhaseSet& phis,
                               const MultichannelProblem& problem)
{
    if (c >= problem.channels())
        throw std::invalid_argument("channel index " + std::to_string(c) + " out of range");
    check_channels(phis, problem);
    auto grad = ring_gradient(phis[c].values());
    grad[0] += 2.0 * phis[c][0] - phis[problem.prev(c)][0] - phis[problem.next(c)][0];
    return PhaseVector(std::move(grad));
}

}  // namespace desync
