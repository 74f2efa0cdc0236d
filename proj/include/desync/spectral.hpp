#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "desync/problem.hpp"

namespace desync {

inline constexpr std::size_t max_spectral_dimension = 4096;

struct IterationSystem {
    Eigen::MatrixXd matrix;  // M
    Eigen::VectorXd offset;  // b
};

// Stacked affine map phi' = M phi + b of the joint Sync/Desync iteration.
IterationSystem build_iteration_matrix(const MultichannelProblem& problem);

// u = (e_1; ...; e_1), the left eigenvector of M for eigenvalue 1.
Eigen::VectorXd sync_selector(const MultichannelProblem& problem);

// M - (1/C) 1 u^T. The rank-one term is the spectral projector of eigenvalue 1.
Eigen::MatrixXd deflated_matrix(const MultichannelProblem& problem, const Eigen::MatrixXd& m);

// Limit of the joint iteration from a start whose Sync offsets sum to sync_sum.
Eigen::VectorXd iteration_limit(const MultichannelProblem& problem, double sync_sum);

// 1 - 2b + 2b cos(pi j / n), j = 1..n-1
std::vector<double> toeplitz_eigenvalues(std::size_t n, double beta);

// 1 - g + g exp(2 pi i j / C), j = 1..C
std::vector<std::complex<double>> circulant_eigenvalues(std::size_t channels, double gamma);

// Largest eigenvalue of the ring Laplacian D^T D: max_k 2 - 2 cos(2 pi k / n).
double ring_laplacian_max_eigenvalue(std::size_t n);

struct SpectralReport {
    std::optional<std::vector<double>> eigenvalues_T;
    std::optional<std::vector<std::complex<double>>> eigenvalues_R;
    std::vector<std::complex<double>> eigenvalues_M;
    double spectral_radius_deflated = 0.0;
    bool converges = false;
    // Largest distance between an analytic eigenvalue and its matched numeric one.
    std::optional<double> max_analytic_mismatch;
    std::size_t unit_eigenvalue_multiplicity = 0;
    bool solver_ok = true;
};

SpectralReport spectral_report(const MultichannelProblem& problem);

}  // namespace desync
