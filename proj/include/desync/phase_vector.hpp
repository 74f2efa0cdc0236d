#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace desync {

// Per-channel phase offsets. Values are nominally in [0,1) but the
// vector iterations treat them as plain reals and never wrap them.
class PhaseVector {
public:
    explicit PhaseVector(std::vector<double> values);
    PhaseVector(std::initializer_list<double> values);

    // (shift, shift + 1/n, ..., shift + (n-1)/n)
    static PhaseVector equispaced(std::size_t n, double shift = 0.0);

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }
    const std::vector<double>& vec() const noexcept { return values_; }

    double sum() const noexcept;
    double mean() const noexcept { return sum() / static_cast<double>(size()); }

    bool operator==(const PhaseVector&) const = default;

private:
    std::vector<double> values_;
};

using PhaseSet = std::vector<PhaseVector>;

}  // namespace desync
