#include "desync/bounds.hpp"

#include <cmath>
#include <stdexcept>

namespace desync {

namespace {

bool fast_guaranteed(const SingleChannelProblem& p) { return p.alpha() <= 0.5; }

}  // namespace

double worst_case_distance_sq(std::size_t n)
{
    const double nn = static_cast<double>(n);
    return (3.5 * nn * nn + 3.0 * nn + 4.0) / (3.0 * nn);
}

double solution_distance(const PhaseVector& phi0, const SingleChannelProblem& problem)
{
    const std::size_t n = problem.n();
    if (phi0.size() != n)
        throw std::invalid_argument("solution_distance: dimension mismatch");
    const double v = problem.spacing();
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        z += phi0[i] - static_cast<double>(i) * v;
    z /= static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = static_cast<double>(i) * v + z - phi0[i];
        acc += r * r;
    }
    return acc;
}

double desync_round_bound(const SingleChannelProblem& problem, double distance_sq, double g0)
{
    const double eps = problem.epsilon();
    if (g0 <= eps)
        return 0.0;
    const double a = problem.alpha();
    return distance_sq / (2.0 * a * (1.0 - a)) * (1.0 / eps - 1.0 / g0);
}

double desync_round_bound_worst_case(const SingleChannelProblem& problem,
                                     std::optional<double> g0)
{
    const double eps = problem.epsilon();
    if (g0 && *g0 <= eps)
        return 0.0;
    const double a = problem.alpha();
    const double nn = static_cast<double>(problem.n());
    const double bracket = 3.5 * nn * nn + 3.0 * nn + 4.0;
    const double inv = 1.0 / eps - (g0 ? 1.0 / *g0 : 0.0);
    return bracket / (6.0 * nn * a * (1.0 - a)) * inv;
}

FastBound fast_desync_round_bound(const SingleChannelProblem& problem, double distance,
                                  std::optional<double> g0)
{
    if (distance < 0.0)
        throw std::invalid_argument("fast_desync_round_bound: negative distance");
    const bool ok = fast_guaranteed(problem);
    if (g0 && *g0 <= problem.epsilon())
        return {0.0, ok};
    return {2.0 * distance / std::sqrt(problem.alpha() * problem.epsilon()), ok};
}

FastBound fast_desync_round_bound_worst_case(const SingleChannelProblem& problem)
{
    const double nn = static_cast<double>(problem.n());
    const double bracket = 3.5 * nn * nn + 3.0 * nn + 4.0;
    const double value =
        2.0 * std::sqrt(bracket / (3.0 * nn * problem.alpha() * problem.epsilon()));
    return {value, fast_guaranteed(problem)};
}

}  // namespace desync
