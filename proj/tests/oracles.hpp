#pragma once

// Brute-force reference implementations shared by unit and acceptance tests.

#include "biofuse/dataset.hpp"
#include "biofuse/spectra.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

// Direct convolution with a Gaussian cut at ceil(4 sigma), weights renormalised at each position.
inline std::vector<double> smooth(const std::vector<double>& x, double sigma) {
    const auto n = static_cast<long>(x.size());
    const long r = static_cast<long>(std::ceil(4.0 * sigma));
    std::vector<double> out(x.size());
    for (long i = 0; i < n; ++i) {
        double num = 0.0, den = 0.0;
        for (long k = -r; k <= r; ++k) {
            const long j = i + k;
            if (j < 0 || j >= n) continue;
            const double w = std::exp(-static_cast<double>(k * k) / (2.0 * sigma * sigma));
            num += w * x[static_cast<std::size_t>(j)];
            den += w;
        }
        out[static_cast<std::size_t>(i)] = num / den;
    }
    return out;
}

// Every monotone matching, scored as matched similarity minus gap per unmatched peak.
inline double exhaustive_match(const std::vector<double>& ref, const std::vector<double>& tgt,
                               const biofuse::PipelineConfig& cfg) {
    double best = -std::numeric_limits<double>::infinity();
    std::function<void(std::size_t, std::size_t, double, std::size_t)> rec = [&](std::size_t r, std::size_t t,
                                                                               double acc, std::size_t matched) {
        const double total = acc - cfg.gap_penalty * static_cast<double>(ref.size() + tgt.size() - 2 * matched);
        best = std::max(best, total);
        for (std::size_t i = r; i < ref.size(); ++i)
            for (std::size_t j = t; j < tgt.size(); ++j) {
                if (std::abs(ref[i] - tgt[j]) > cfg.match_cutoff()) continue;
                const double d = ref[i] - tgt[j];
                const double s = std::exp(-d * d / (2.0 * cfg.match_bandwidth * cfg.match_bandwidth));
                rec(i + 1, j + 1, acc + s, matched + 1);
            }
    };
    rec(0, 0, 0.0, 0);
    return best;
}

struct Plane {
    double w1, w2, b;
};

// Hard-margin hyperplane of a 2-D point set by enumerating support sets of size two and three.
inline std::optional<Plane> max_margin_2d(const std::vector<std::array<double, 2>>& x, const std::vector<int>& y) {
    std::optional<Plane> best;
    auto consider = [&](Plane p) {
        for (std::size_t i = 0; i < x.size(); ++i)
            if (y[i] * (p.w1 * x[i][0] + p.w2 * x[i][1] + p.b) < 1.0 - 1e-9) return;
        if (!best || p.w1 * p.w1 + p.w2 * p.w2 < best->w1 * best->w1 + best->w2 * best->w2) best = p;
    };
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (y[i] <= 0 || y[j] >= 0) continue;
            const double d1 = x[i][0] - x[j][0], d2 = x[i][1] - x[j][1];
            const double nn = d1 * d1 + d2 * d2;
            const Plane p{2.0 * d1 / nn, 2.0 * d2 / nn, 0.0};
            consider({p.w1, p.w2, -(p.w1 * (x[i][0] + x[j][0]) + p.w2 * (x[i][1] + x[j][1])) / 2.0});
        }
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            if (y[a] != y[b]) continue;
            for (std::size_t c = 0; c < n; ++c) {
                if (y[c] == y[a]) continue;
                const double t1 = x[b][0] - x[a][0], t2 = x[b][1] - x[a][1];
                const double len = std::hypot(t1, t2);
                const double n1 = -t2 / len, n2 = t1 / len;
                const double s = y[a];
                const double proj = n1 * (x[a][0] - x[c][0]) + n2 * (x[a][1] - x[c][1]);
                if (std::abs(proj) < 1e-12) continue;
                const double lambda = 2.0 * s / proj;
                consider({lambda * n1, lambda * n2, s - lambda * (n1 * x[a][0] + n2 * x[a][1])});
            }
        }
    return best;
}

inline double pair_count_auc(const std::vector<double>& s, const std::vector<biofuse::Label>& y) {
    double wins = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (!biofuse::is_case(y[i]) || biofuse::is_case(y[j])) continue;
            pairs += 1.0;
            if (s[i] > s[j]) wins += 1.0;
            else if (s[i] == s[j]) wins += 0.5;
        }
    return wins / pairs;
}

// Welch statistic of one column, cases minus controls, sample variances.
inline double welch_t(const std::vector<double>& v, const std::vector<biofuse::Label>& y) {
    double s1 = 0, s0 = 0, n1 = 0, n0 = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (biofuse::is_case(y[i])) {
            s1 += v[i];
            n1 += 1;
        } else {
            s0 += v[i];
            n0 += 1;
        }
    }
    const double m1 = s1 / n1, m0 = s0 / n0;
    double q1 = 0, q0 = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = v[i] - (biofuse::is_case(y[i]) ? m1 : m0);
        (biofuse::is_case(y[i]) ? q1 : q0) += d * d;
    }
    return (m1 - m0) / std::sqrt(q1 / (n1 - 1) / n1 + q0 / (n0 - 1) / n0);
}

// Mean difference over its variance-corrected standard error.
inline double corrected_t(const std::vector<double>& d, double n_train, double n_test) {
    const double k = static_cast<double>(d.size());
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= k;
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    return mean / std::sqrt((1.0 / k + n_test / n_train) * ss / (k - 1.0));
}

// Two-sided Student t tail by Simpson integration of the density over [0, |t|].
inline double student_two_sided(double t, double df) {
    const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
    auto pdf = [&](double x) { return c * std::pow(1.0 + x * x / df, -(df + 1) / 2); };
    const int steps = 200000;
    const double h = std::abs(t) / steps;
    double sum = pdf(0.0) + pdf(std::abs(t));
    for (int i = 1; i < steps; ++i) sum += (i % 2 ? 4.0 : 2.0) * pdf(i * h);
    return 1.0 - 2.0 * sum * h / 3.0;
}

} // namespace oracle
