#include "desync/problem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace desync {

SingleChannelProblem::SingleChannelProblem(std::size_t n, double alpha, double epsilon)
    : n_(n), alpha_(alpha), epsilon_(epsilon)
{
    if (n < 2)
        throw std::invalid_argument("n must be >= 2, got " + std::to_string(n));
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("alpha out of (0,1): " + std::to_string(alpha));
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw std::invalid_argument("epsilon must be positive: " + std::to_string(epsilon));
}

MultichannelProblem::MultichannelProblem(std::vector<std::size_t> channel_counts, double beta,
                                         double gamma)
    : counts_(std::move(channel_counts)), beta_(beta), gamma_(gamma)
{
    if (counts_.size() < 2)
        throw std::invalid_argument("need at least 2 channels, got " +
                                    std::to_string(counts_.size()));
    for (std::size_t c = 0; c < counts_.size(); ++c) {
        if (counts_[c] < 2)
            throw std::invalid_argument("channel " + std::to_string(c) +
                                        " needs >= 2 nodes, got " + std::to_string(counts_[c]));
    }
    if (!(beta > 0.0 && beta < 0.5))
        throw std::invalid_argument("beta out of (0,1/2): " + std::to_string(beta));
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("gamma out of (0,1): " + std::to_string(gamma));

    offsets_.resize(counts_.size() + 1, 0);
    for (std::size_t c = 0; c < counts_.size(); ++c)
        offsets_[c + 1] = offsets_[c] + counts_[c];
}

MultichannelProblem MultichannelProblem::uniform(std::size_t channels, std::size_t n,
                                                 double beta, double gamma)
{
    return MultichannelProblem(std::vector<std::size_t>(channels, n), beta, gamma);
}

bool MultichannelProblem::is_uniform() const noexcept
{
    return std::all_of(counts_.begin(), counts_.end(),
                       [&](std::size_t n) { return n == counts_.front(); });
}

}  // namespace desync
