#pragma once

// Numerical cores behind the linear trainers, exposed for direct testing.

#include "biofuse/dataset.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace biofuse::solvers {

struct SvmDualSolution {
    std::vector<double> alpha;
    double bias = 0.0; ///< w0 of the decision function
    double gap = 0.0;  ///< final maximal KKT violation
    std::size_t iterations = 0;
    bool converged = true;
};

/// Soft-margin SVM dual on a precomputed kernel matrix, solved by SMO
/// (two-coordinate ascent respecting sum(alpha_i y_i) = 0). Stops when the
/// maximal violating pair gap drops to tol or after max_iter updates.
SvmDualSolution solve_svm_dual(const Matrix& kernel, std::span<const Label> y, double C, double tol = 1e-6,
                               std::size_t max_iter = 0);

/// sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij
double svm_dual_objective(const Matrix& kernel, std::span<const Label> y, std::span<const double> alpha);

/// Linear kernel Gram matrix of the rows of X.
Matrix gram_matrix(const Matrix& X);

/// Penalized log-likelihood sum_i log sigmoid(y_i (w.x_i + b)) - l2/2 |w|^2.
/// theta holds w followed by b; the bias is not penalized.
double logistic_objective(const Matrix& X, std::span<const Label> y, std::span<const double> theta, double l2);
std::vector<double> logistic_gradient(const Matrix& X, std::span<const Label> y, std::span<const double> theta,
                                      double l2);

struct LogisticFit {
    std::vector<double> theta;
    double grad_norm = 0.0;
    std::size_t iterations = 0;
    bool converged = true;
};

/// Gradient ascent with Armijo backtracking (Barzilai-Borwein trial steps),
/// until the gradient infinity-norm is at most tol.
LogisticFit maximize_logistic(const Matrix& X, std::span<const Label> y, double l2, double tol = 1e-6,
                              std::size_t max_iter = 200000);

} // namespace biofuse::solvers
