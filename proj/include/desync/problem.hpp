#pragma once

#include <cstddef>
#include <vector>

namespace desync {

// The single-channel code stores alpha; the multichannel code stores beta.
constexpr double alpha_to_beta(double alpha) noexcept { return alpha / 2.0; }
constexpr double beta_to_alpha(double beta) noexcept { return 2.0 * beta; }

class SingleChannelProblem {
public:
    // Lipschitz constant of the gradient: largest eigenvalue bound of the
    // ring-graph Laplacian.
    static constexpr double lipschitz = 4.0;

    SingleChannelProblem(std::size_t n, double alpha, double epsilon);

    std::size_t n() const noexcept { return n_; }
    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return alpha_to_beta(alpha_); }
    double epsilon() const noexcept { return epsilon_; }
    double spacing() const noexcept { return 1.0 / static_cast<double>(n_); }

private:
    std::size_t n_;
    double alpha_;
    double epsilon_;
};

class MultichannelProblem {
public:
    MultichannelProblem(std::vector<std::size_t> channel_counts, double beta, double gamma);

    // C channels with n nodes each.
    static MultichannelProblem uniform(std::size_t channels, std::size_t n, double beta,
                                       double gamma);

    std::size_t channels() const noexcept { return counts_.size(); }
    std::size_t count(std::size_t c) const { return counts_.at(c); }
    const std::vector<std::size_t>& channel_counts() const noexcept { return counts_; }
    std::size_t total_nodes() const noexcept { return offsets_.back(); }
    // Index of channel c's first (Sync) coordinate in the stacked vector.
    std::size_t offset(std::size_t c) const { return offsets_.at(c); }
    bool is_uniform() const noexcept;

    double beta() const noexcept { return beta_; }
    double gamma() const noexcept { return gamma_; }

    std::size_t next(std::size_t c) const noexcept { return (c + 1) % channels(); }
    std::size_t prev(std::size_t c) const noexcept
    {
        return (c + channels() - 1) % channels();
    }

private:
    std::vector<std::size_t> counts_;
    std::vector<std::size_t> offsets_;
    double beta_;
    double gamma_;
};

}  // namespace desync
