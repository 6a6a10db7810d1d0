#include "biofuse/models.hpp"

#include <cmath>
#include <numbers>

namespace biofuse {

namespace {

double log_normal_pdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * std::log(2.0 * std::numbers::pi * var) - d * d / (2.0 * var);
}

} // namespace

double GaussianNB::log_odds(std::span<const double> x) const {
    double v = log_prior_case - log_prior_control;
    for (std::size_t j = 0; j < x.size(); ++j)
        v += log_normal_pdf(x[j], mean_case[j], var_case[j]) - log_normal_pdf(x[j], mean_control[j], var_control[j]);
    return v;
}

TrainedModel train_gaussian_nb(const Dataset& d) {
    d.require_trainable();
    const std::size_t n = d.n_samples();
    const std::size_t p = d.n_features();
    const double n_case = static_cast<double>(d.count(Label::Case));
    const double n_control = static_cast<double>(d.count(Label::Control));

    GaussianNB m;
    m.mean_case.assign(p, 0.0);
    m.mean_control.assign(p, 0.0);
    m.var_case.assign(p, 0.0);
    m.var_control.assign(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto& mean = is_case(d.y[i]) ? m.mean_case : m.mean_control;
        for (std::size_t j = 0; j < p; ++j) mean[j] += d.X(i, j);
    }
    for (std::size_t j = 0; j < p; ++j) {
        m.mean_case[j] /= n_case;
        m.mean_control[j] /= n_control;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const bool c = is_case(d.y[i]);
        const auto& mean = c ? m.mean_case : m.mean_control;
        auto& var = c ? m.var_case : m.var_control;
        for (std::size_t j = 0; j < p; ++j) {
            const double dv = d.X(i, j) - mean[j];
            var[j] += dv * dv;
        }
    }

    // Floor: 1e-9 of the average per-feature (pooled, population) variance.
    double mean_var = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += d.X(i, j);
        mu /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += (d.X(i, j) - mu) * (d.X(i, j) - mu);
        mean_var += ss / static_cast<double>(n);
    }
    if (p > 0) mean_var /= static_cast<double>(p);
    m.var_floor = mean_var > 0.0 ? 1e-9 * mean_var : 1e-12;

    for (std::size_t j = 0; j < p; ++j) {
        m.var_case[j] = std::max(m.var_case[j] / n_case, m.var_floor);
        m.var_control[j] = std::max(m.var_control[j] / n_control, m.var_floor);
    }
    m.log_prior_case = std::log(n_case / static_cast<double>(n));
    m.log_prior_control = std::log(n_control / static_cast<double>(n));
    return TrainedModel(std::move(m), p);
}

} // namespace biofuse
