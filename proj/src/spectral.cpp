#include "desync/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace desync {

namespace {

constexpr double unit_tolerance = 1e-6;

void check_dimension(const MultichannelProblem& problem)
{
    if (problem.total_nodes() > max_spectral_dimension)
        throw std::invalid_argument("iteration matrix dimension " +
                                    std::to_string(problem.total_nodes()) + " exceeds " +
                                    std::to_string(max_spectral_dimension));
}

double match_spectra(const std::vector<std::complex<double>>& analytic,
                     const std::vector<std::complex<double>>& numeric)
{
    std::vector<bool> used(numeric.size(), false);
    double worst = 0.0;
    for (const auto& a : analytic) {
        std::size_t best = numeric.size();
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < numeric.size(); ++k) {
            if (used[k])
                continue;
            const double d = std::abs(numeric[k] - a);
            if (d < best_dist) {
                best_dist = d;
                best = k;
            }
        }
        if (best == numeric.size())
            return std::numeric_limits<double>::infinity();
        used[best] = true;
        worst = std::max(worst, best_dist);
    }
    return worst;
}

}  // namespace

IterationSystem build_iteration_matrix(const MultichannelProblem& problem)
{
    check_dimension(problem);
    const auto dim = static_cast<Eigen::Index>(problem.total_nodes());
    const double beta = problem.beta();
    const double gamma = problem.gamma();
    IterationSystem sys{Eigen::MatrixXd::Zero(dim, dim), Eigen::VectorXd::Zero(dim)};
    auto& m = sys.matrix;

    for (std::size_t c = 0; c < problem.channels(); ++c) {
        const auto o = static_cast<Eigen::Index>(problem.offset(c));
        const auto n = static_cast<Eigen::Index>(problem.count(c));
        const auto next = static_cast<Eigen::Index>(problem.offset(problem.next(c)));

        m(o, o) += 1.0 - gamma;
        m(o, next) += gamma;

        for (Eigen::Index i = 1; i < n; ++i) {
            const Eigen::Index row = o + i;
            m(row, row) += 1.0 - 2.0 * beta;
            m(row, row - 1) += beta;
            if (i + 1 < n) {
                m(row, row + 1) += beta;
            } else {
                // last node wraps onto the Sync node one period later
                m(row, o) += beta;
                sys.offset(row) = beta;
            }
        }
    }
    return sys;
}

Eigen::VectorXd sync_selector(const MultichannelProblem& problem)
{
    Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(problem.total_nodes()));
    for (std::size_t c = 0; c < problem.channels(); ++c)
        u(static_cast<Eigen::Index>(problem.offset(c))) = 1.0;
    return u;
}

Eigen::MatrixXd deflated_matrix(const MultichannelProblem& problem, const Eigen::MatrixXd& m)
{
    const Eigen::VectorXd u = sync_selector(problem);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.rows());
    return m - ones * u.transpose() / static_cast<double>(problem.channels());
}

Eigen::VectorXd iteration_limit(const MultichannelProblem& problem, double sync_sum)
{
    const auto sys = build_iteration_matrix(problem);
    const Eigen::MatrixXd mbar = deflated_matrix(problem, sys.matrix);
    const Eigen::Index dim = mbar.rows();
    const Eigen::VectorXd rhs =
        sys.offset +
        Eigen::VectorXd::Constant(dim, sync_sum / static_cast<double>(problem.channels()));
    const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(dim, dim) - mbar;
    return lhs.partialPivLu().solve(rhs);
}

std::vector<double> toeplitz_eigenvalues(std::size_t n, double beta)
{
    std::vector<double> out;
    for (std::size_t j = 1; j < n; ++j)
        out.push_back(1.0 - 2.0 * beta +
                      2.0 * beta *
                          std::cos(std::numbers::pi * static_cast<double>(j) /
                                   static_cast<double>(n)));
    return out;
}

std::vector<std::complex<double>> circulant_eigenvalues(std::size_t channels, double gamma)
{
    std::vector<std::complex<double>> out;
    for (std::size_t j = 1; j <= channels; ++j) {
        const double angle =
            2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(channels);
        out.push_back(1.0 - gamma + gamma * std::polar(1.0, angle));
    }
    return out;
}

double ring_laplacian_max_eigenvalue(std::size_t n)
{
    double best = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        best = std::max(best, 2.0 - 2.0 * std::cos(2.0 * std::numbers::pi *
                                                   static_cast<double>(k) /
                                                   static_cast<double>(n)));
    return best;
}

SpectralReport spectral_report(const MultichannelProblem& problem)
{
    SpectralReport report;
    const auto sys = build_iteration_matrix(problem);

    Eigen::EigenSolver<Eigen::MatrixXd> solver(sys.matrix, false);
    if (solver.info() != Eigen::Success) {
        report.solver_ok = false;
        return report;
    }
    const auto& ev = solver.eigenvalues();
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        report.eigenvalues_M.push_back(ev(k));
        if (std::abs(ev(k) - 1.0) < unit_tolerance)
            ++report.unit_eigenvalue_multiplicity;
    }

    Eigen::EigenSolver<Eigen::MatrixXd> deflated(deflated_matrix(problem, sys.matrix), false);
    if (deflated.info() != Eigen::Success) {
        report.solver_ok = false;
        return report;
    }
    report.spectral_radius_deflated = deflated.eigenvalues().cwiseAbs().maxCoeff();
    report.converges = report.spectral_radius_deflated < 1.0;

    if (problem.is_uniform()) {
        const std::size_t n = problem.count(0);
        report.eigenvalues_T = toeplitz_eigenvalues(n, problem.beta());
        report.eigenvalues_R = circulant_eigenvalues(problem.channels(), problem.gamma());
        std::vector<std::complex<double>> analytic;
        for (std::size_t c = 0; c < problem.channels(); ++c)
            for (double t : *report.eigenvalues_T)
                analytic.emplace_back(t, 0.0);
        for (const auto& r : *report.eigenvalues_R)
            analytic.push_back(r);
        report.max_analytic_mismatch = match_spectra(analytic, report.eigenvalues_M);
    }
    return report;
}

}  // namespace desync
