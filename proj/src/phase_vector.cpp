#include "desync/phase_vector.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace desync {

PhaseVector::PhaseVector(std::vector<double> values) : values_(std::move(values))
{
    if (values_.size() < 2)
        throw std::invalid_argument("PhaseVector: length must be >= 2, got " +
                                    std::to_string(values_.size()));
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i]))
            throw std::invalid_argument("PhaseVector: non-finite value at index " +
                                        std::to_string(i));
    }
}

PhaseVector::PhaseVector(std::initializer_list<double> values)
    : PhaseVector(std::vector<double>(values))
{
}

PhaseVector PhaseVector::equispaced(std::size_t n, double shift)
{
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = shift + static_cast<double>(i) / static_cast<double>(n);
    return PhaseVector(std::move(v));
}

double PhaseVector::sum() const noexcept
{
    return std::accumulate(values_.begin(), values_.end(), 0.0);
}

}  // namespace desync
