#include "biofuse/error.hpp"
#include "biofuse/models.hpp"
#include "biofuse/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace biofuse {

namespace solvers {

namespace {

// log(sigmoid(z)) without overflow.
double log_sigmoid(double z) {
    return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double margin(const Matrix& X, std::size_t i, std::span<const double> theta) {
    auto xi = X.row(i);
    double v = theta[xi.size()];
    for (std::size_t k = 0; k < xi.size(); ++k) v += theta[k] * xi[k];
    return v;
}

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace

double logistic_objective(const Matrix& X, std::span<const Label> y, std::span<const double> theta, double l2) {
    double ll = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) ll += log_sigmoid(sign_of(y[i]) * margin(X, i, theta));
    double sq = 0.0;
    for (std::size_t k = 0; k < X.cols(); ++k) sq += theta[k] * theta[k];
    return ll - 0.5 * l2 * sq;
}

std::vector<double> logistic_gradient(const Matrix& X, std::span<const Label> y, std::span<const double> theta,
                                      double l2) {
    const std::size_t p = X.cols();
    std::vector<double> g(p + 1, 0.0);
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const double yi = sign_of(y[i]);
        const double r = yi * sigmoid(-yi * margin(X, i, theta));
        auto xi = X.row(i);
        for (std::size_t k = 0; k < p; ++k) g[k] += r * xi[k];
        g[p] += r;
    }
    for (std::size_t k = 0; k < p; ++k) g[k] -= l2 * theta[k];
    return g;
}

LogisticFit maximize_logistic(const Matrix& X, std::span<const Label> y, double l2, double tol,
                              std::size_t max_iter) {
    const std::size_t dim = X.cols() + 1;
    LogisticFit fit;
    fit.theta.assign(dim, 0.0);
    double f = logistic_objective(X, y, fit.theta, l2);
    auto g = logistic_gradient(X, y, fit.theta, l2);
    double step = 1.0 / std::max<double>(1.0, static_cast<double>(X.rows()));

    std::vector<double> trial(dim);
    std::size_t it = 0;
    for (; it < max_iter; ++it) {
        fit.grad_norm = inf_norm(g);
        if (fit.grad_norm <= tol) break;

        double gg = 0.0;
        for (double v : g) gg += v * v;
        double t = step;
        double f_new = f;
        bool accepted = false;
        for (int halvings = 0; halvings < 80; ++halvings) {
            for (std::size_t k = 0; k < dim; ++k) trial[k] = fit.theta[k] + t * g[k];
            f_new = logistic_objective(X, y, trial, l2);
            // Slack of a few ulps of f keeps rounding from stalling the search near the optimum.
            const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f));
            if (f_new >= f + 1e-4 * t * gg - slack) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;

        auto g_new = logistic_gradient(X, y, trial, l2);
        // Barzilai-Borwein trial step for the next iteration.
        double ss = 0.0, sy = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            const double s = trial[k] - fit.theta[k];
            const double dy = g_new[k] - g[k];
            ss += s * s;
            sy += s * dy;
        }
        step = (sy < 0.0) ? std::clamp(ss / -sy, 1e-10, 1e10) : std::min(2.0 * t, 1e10);
        fit.theta = trial;
        f = f_new;
        g = std::move(g_new);
    }
    fit.iterations = it;
    fit.grad_norm = inf_norm(g);
    fit.converged = fit.grad_norm <= tol;
    return fit;
}

} // namespace solvers

double LogisticModel::linear_predictor(std::span<const double> x) const {
    const auto z = standardizer.apply(x);
    double v = b;
    for (std::size_t k = 0; k < w.size(); ++k) v += w[k] * z[k];
    return v;
}

TrainedModel train_logistic(const Dataset& d, double l2) {
    d.require_trainable();
    if (!(l2 >= 0.0)) fail(ErrorCode::ConfigInvalid, "logistic l2 must be non-negative");
    LogisticModel m;
    m.l2 = l2;
    m.standardizer = Standardizer::fit(d.X);
    const Matrix Z = m.standardizer.apply(d.X);
    auto fit = solvers::maximize_logistic(Z, d.y, l2);
    m.w.assign(fit.theta.begin(), fit.theta.end() - 1);
    m.b = fit.theta.back();
    m.converged = fit.converged;
    m.iterations = fit.iterations;
    m.grad_norm = fit.grad_norm;
    return TrainedModel(std::move(m), d.n_features());
}

} // namespace biofuse
