#include "biofuse/error.hpp"
#include "biofuse/models.hpp"
#include "biofuse/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace biofuse {

namespace solvers {

namespace {

constexpr double kTau = 1e-12;

} // namespace

Matrix gram_matrix(const Matrix& X) {
    const std::size_t n = X.rows();
    Matrix K(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        auto xi = X.row(i);
        for (std::size_t j = i; j < n; ++j) {
            auto xj = X.row(j);
            double dot = 0.0;
            for (std::size_t k = 0; k < xi.size(); ++k) dot += xi[k] * xj[k];
            K(i, j) = dot;
            K(j, i) = dot;
        }
    }
    return K;
}

double svm_dual_objective(const Matrix& K, std::span<const Label> y, std::span<const double> alpha) {
    const std::size_t n = alpha.size();
    double linear = 0.0;
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        linear += alpha[i];
        for (std::size_t j = 0; j < n; ++j)
            quad += alpha[i] * alpha[j] * sign_of(y[i]) * sign_of(y[j]) * K(i, j);
    }
    return linear - 0.5 * quad;
}

SvmDualSolution solve_svm_dual(const Matrix& K, std::span<const Label> labels, double C, double tol,
                               std::size_t max_iter) {
    const std::size_t n = labels.size();
    if (K.rows() != n || K.cols() != n) fail(ErrorCode::DimensionMismatch, "kernel matrix does not match labels");
    if (max_iter == 0) max_iter = 10000 * std::max<std::size_t>(n, 1);

    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = sign_of(labels[i]);
    auto Q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * K(i, j); };

    // Minimizes 1/2 a'Qa - e'a; G is its gradient.
    std::vector<double> alpha(n, 0.0);
    std::vector<double> G(n, -1.0);
    auto at_upper = [&](std::size_t t) { return alpha[t] >= C; };
    auto at_lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

    SvmDualSolution sol;
    std::size_t iter = 0;
    for (;; ++iter) {
        // Maximal violating pair with second-order selection of j.
        double gmax = -std::numeric_limits<double>::infinity();
        std::size_t i = n;
        for (std::size_t t = 0; t < n; ++t) {
            if (y[t] > 0) {
                if (!at_upper(t) && -G[t] >= gmax) { gmax = -G[t]; i = t; }
            } else {
                if (!at_lower(t) && G[t] >= gmax) { gmax = G[t]; i = t; }
            }
        }
        double gmax2 = -std::numeric_limits<double>::infinity();
        double obj_min = std::numeric_limits<double>::infinity();
        std::size_t j = n;
        for (std::size_t t = 0; t < n && i < n; ++t) {
            if (y[t] > 0) {
                if (!at_lower(t)) {
                    const double grad_diff = gmax + G[t];
                    gmax2 = std::max(gmax2, G[t]);
                    if (grad_diff > 0) {
                        double quad = K(i, i) + K(t, t) - 2.0 * y[i] * Q(i, t);
                        if (quad <= 0) quad = kTau;
                        const double obj = -grad_diff * grad_diff / quad;
                        if (obj <= obj_min) { obj_min = obj; j = t; }
                    }
                }
            } else {
                if (!at_upper(t)) {
                    const double grad_diff = gmax - G[t];
                    gmax2 = std::max(gmax2, -G[t]);
                    if (grad_diff > 0) {
                        double quad = K(i, i) + K(t, t) + 2.0 * y[i] * Q(i, t);
                        if (quad <= 0) quad = kTau;
                        const double obj = -grad_diff * grad_diff / quad;
                        if (obj <= obj_min) { obj_min = obj; j = t; }
                    }
                }
            }
        }
        sol.gap = (i < n) ? gmax + gmax2 : 0.0;
        if (i >= n || j >= n || sol.gap <= tol) break;
        if (iter >= max_iter) {
            sol.converged = false;
            break;
        }

        const double old_i = alpha[i];
        const double old_j = alpha[j];
        if (y[i] != y[j]) {
            double quad = K(i, i) + K(j, j) + 2.0 * Q(i, j);
            if (quad <= 0) quad = kTau;
            const double delta = (-G[i] - G[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0) {
                if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
            } else {
                if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
            }
            if (diff > 0) {
                if (alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
            } else {
                if (alpha[j] > C) { alpha[j] = C; alpha[i] = C + diff; }
            }
        } else {
            double quad = K(i, i) + K(j, j) - 2.0 * Q(i, j);
            if (quad <= 0) quad = kTau;
            const double delta = (G[i] - G[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
            } else {
                if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
            }
            if (sum > C) {
                if (alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
            } else {
                if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
            }
        }
        const double di = alpha[i] - old_i;
        const double dj = alpha[j] - old_j;
        for (std::size_t t = 0; t < n; ++t) G[t] += Q(t, i) * di + Q(t, j) * dj;
    }
    sol.iterations = iter;

    // Offset from free multipliers, else the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * G[t];
        if (at_upper(t)) {
            if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else if (at_lower(t)) {
            if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
    sol.bias = -rho;
    sol.alpha = std::move(alpha);
    return sol;
}

} // namespace solvers

double LinearModel::decision(std::span<const double> x) const {
    const auto z = standardizer.apply(x);
    double v = w0;
    for (std::size_t k = 0; k < w.size(); ++k) v += w[k] * z[k];
    return v;
}

std::pair<std::vector<double>, double> LinearModel::original_space() const {
    std::vector<double> wo(w.size());
    double bo = w0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        wo[k] = w[k] / standardizer.scale[k];
        bo -= wo[k] * standardizer.mean[k];
    }
    return {wo, bo};
}

TrainedModel train_linear_svm(const Dataset& d, double C) {
    d.require_trainable();
    if (!(C > 0.0)) fail(ErrorCode::ConfigInvalid, "SVM C must be positive");

    LinearModel m;
    m.C = C;
    m.standardizer = Standardizer::fit(d.X);
    const Matrix Z = m.standardizer.apply(d.X);
    const Matrix K = solvers::gram_matrix(Z);
    auto sol = solvers::solve_svm_dual(K, d.y, C);

    m.w.assign(Z.cols(), 0.0);
    for (std::size_t i = 0; i < Z.rows(); ++i) {
        if (sol.alpha[i] == 0.0) continue;
        const double coef = sol.alpha[i] * sign_of(d.y[i]);
        auto zi = Z.row(i);
        for (std::size_t k = 0; k < zi.size(); ++k) m.w[k] += coef * zi[k];
    }
    m.w0 = sol.bias;
    m.alpha = std::move(sol.alpha);
    m.converged = sol.converged;
    m.iterations = sol.iterations;
    m.kkt_gap = sol.gap;
    return TrainedModel(std::move(m), d.n_features());
}

} // namespace biofuse
