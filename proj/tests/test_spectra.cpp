#include "biofuse/error.hpp"
#include "biofuse/spectra.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

using namespace biofuse;
using testing::make_spectrum;

namespace {

// Brute-force two-pass baseline: truncated window minimum, then truncated window mean.
std::vector<double> naive_baseline(const std::vector<double>& x, int window) {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const std::ptrdiff_t half = window / 2;
    std::vector<double> mins(x.size()), out(x.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double m = std::numeric_limits<double>::infinity();
        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - half); j <= std::min(n - 1, i + half); ++j)
            m = std::min(m, x[static_cast<std::size_t>(j)]);
        mins[static_cast<std::size_t>(i)] = m;
    }
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double s = 0.0;
        int c = 0;
        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - half); j <= std::min(n - 1, i + half); ++j) {
            s += mins[static_cast<std::size_t>(j)];
            ++c;
        }
        out[static_cast<std::size_t>(i)] = s / c;
    }
    return out;
}

std::vector<double> sorted_positions(Rng& rng, std::size_t k, double span) {
    std::vector<double> v(k);
    for (auto& x : v) x = uniform01(rng) * span;
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

} // namespace

TEST_CASE("variance_stabilize takes signed cube roots") {
    auto s = variance_stabilize(make_spectrum({0.0, 8.0, 27.0}));
    CHECK(s.intensity[0] == 0.0);
    CHECK(s.intensity[1] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(s.intensity[2] == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(variance_stabilize(make_spectrum({-8.0, 1.0})).intensity[0] == doctest::Approx(-2.0));

    Rng rng(1);
    auto v = testing::random_vector(rng, 500, 100.0);
    std::sort(v.begin(), v.end());
    const auto r = variance_stabilize(make_spectrum(v)).intensity;
    for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(std::abs(r[i] * r[i] * r[i] - v[i]) <= 1e-12 * std::max(1.0, std::abs(v[i])));
        if (i > 0 && v[i] > v[i - 1]) CHECK(r[i] > r[i - 1]);
    }
}

TEST_CASE("baseline correction matches the brute-force two-pass estimator") {
    Rng rng(2);
    for (int window : {3, 7, 20, 51, 200}) {
        PipelineConfig cfg;
        cfg.baseline_window = window;
        auto v = testing::random_vector(rng, 400, 5.0);
        const auto out = correct_baseline(make_spectrum(v), cfg).intensity;
        const auto base = naive_baseline(v, cfg.effective_baseline_window());
        for (std::size_t i = 0; i < v.size(); ++i) CHECK(out[i] == doctest::Approx(v[i] - base[i]).epsilon(1e-12));
    }
}

TEST_CASE("baseline correction removes constants and keeps isolated peaks") {
    PipelineConfig cfg;
    const auto flat = correct_baseline(make_spectrum(std::vector<double>(600, 42.5)), cfg).intensity;
    for (double x : flat) CHECK(std::abs(x) <= 1e-12);

    std::vector<double> ramp(1000), signal(1000);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 5.0 + 0.02 * static_cast<double>(i);
    const auto peak = testing::bumps(1000, {500.0}, 8.0, 40.0);
    for (std::size_t i = 0; i < signal.size(); ++i) signal[i] = ramp[i] + peak[i];
    const auto out = correct_baseline(make_spectrum(signal), cfg).intensity;
    CHECK(out[500] == doctest::Approx(peak[500]).epsilon(0.05));

    Rng rng(3);
    const auto v = testing::random_vector(rng, 300);
    auto shifted = v;
    for (auto& x : shifted) x += 17.0;
    const auto a = correct_baseline(make_spectrum(v), cfg).intensity;
    const auto b = correct_baseline(make_spectrum(shifted), cfg).intensity;
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-9);
}

TEST_CASE("baseline correction rejects spectra shorter than the window") {
    PipelineConfig cfg;
    CHECK_THROWS_AS(correct_baseline(make_spectrum(std::vector<double>(150, 1.0)), cfg), Error);
    try {
        correct_baseline(make_spectrum(std::vector<double>(150, 1.0)), cfg);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SpectrumTooShort);
    }
}

TEST_CASE("smoothing equals direct convolution") {
    Rng rng(4);
    for (double sigma : {0.4, 1.0, 2.5, 5.0, 11.3}) {
        PipelineConfig cfg;
        cfg.smooth_sigma = sigma;
        const auto v = testing::random_vector(rng, 300, 3.0);
        const auto out = smooth(make_spectrum(v), cfg).intensity;
        const auto ref = oracle::smooth(v, sigma);
        for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(out[i] - ref[i]) <= 1e-10);
    }
}

TEST_CASE("smoothing preserves mass, symmetry and constants") {
    PipelineConfig cfg;
    std::vector<double> impulse(201, 0.0);
    impulse[100] = 1.0;
    const auto out = smooth(make_spectrum(impulse), cfg).intensity;
    double sum = 0.0;
    for (double x : out) sum += x;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    for (int k = 1; k <= 30; ++k) CHECK(out[100 - k] == doctest::Approx(out[100 + k]).epsilon(1e-14));

    const auto flat = smooth(make_spectrum(std::vector<double>(50, 3.25)), cfg).intensity;
    for (double x : flat) CHECK(std::abs(x - 3.25) <= 1e-12);
}

TEST_CASE("repeated smoothing approximates one wider kernel") {
    PipelineConfig a, b, c;
    a.smooth_sigma = 3.0;
    b.smooth_sigma = 4.0;
    c.smooth_sigma = 5.0;
    const auto v = testing::bumps(400, {150.0, 230.0}, 6.0, 10.0);
    const auto twice = smooth(smooth(make_spectrum(v), a), b).intensity;
    const auto once = smooth(make_spectrum(v), c).intensity;
    const double peak = *std::max_element(once.begin(), once.end());
    for (std::size_t i = 60; i < 340; ++i) CHECK(std::abs(twice[i] - once[i]) <= 0.02 * peak);
}

TEST_CASE("TIC normalisation scales the windowed sum") {
    PipelineConfig cfg;
    cfg.tic_lo = 1000.0;
    cfg.tic_hi = 1040.0;
    auto s = make_spectrum({10.0, 10.0, 10.0, 10.0, 10.0, 99.0}); // last point outside the window
    CHECK(windowed_tic(s, cfg) == doctest::Approx(50.0));
    const auto n = normalize_tic(s, cfg, 1.0);
    CHECK(n.intensity[0] == doctest::Approx(0.2));
    CHECK(std::abs(windowed_tic(n, cfg) - 1.0) <= 1e-12);
    const auto again = normalize_tic(n, cfg, 1.0);
    for (std::size_t i = 0; i < n.size(); ++i) CHECK(std::abs(again.intensity[i] - n.intensity[i]) <= 1e-12);

    CHECK_THROWS_AS(normalize_tic(make_spectrum({0.0, 0.0, 0.0}), cfg, 1.0), Error);
}

TEST_CASE("TIC normalisation is idempotent on random spectra") {
    PipelineConfig cfg;
    Rng rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        auto v = testing::random_vector(rng, 2000, 1.0);
        for (auto& x : v) x = std::abs(x) + 0.1;
        const auto s = make_spectrum(v);
        const double target = 1.0 + 1000.0 * uniform01(rng);
        const auto once = normalize_tic(s, cfg, target);
        const auto twice = normalize_tic(once, cfg, target);
        CHECK(std::abs(windowed_tic(once, cfg) - target) <= 1e-9 * target);
        for (std::size_t i = 0; i < v.size(); ++i)
            CHECK(std::abs(twice.intensity[i] - once.intensity[i]) <= 1e-12 * std::abs(once.intensity[i]) + 1e-15);
    }
}

TEST_CASE("QC excludes TIC outliers by sample SD") {
    PipelineConfig cfg;
    cfg.tic_lo = 0.0;
    cfg.tic_hi = 1e9;
    std::vector<Spectrum> batch;
    for (int i = 0; i < 10; ++i) batch.push_back(make_spectrum({50.0, 50.0}, 1000.0, 10.0, "s" + std::to_string(i)));
    batch.push_back(make_spectrum({5000.0, 5000.0}, 1000.0, 10.0, "big"));
    const auto r = qc_filter(batch, cfg);
    REQUIRE(r.excluded.size() == 1);
    CHECK(r.excluded[0].sample_id == "big");
    CHECK(r.kept.size() == 10);

    // Hand computation of mean and sample SD.
    const double mean = (10 * 100.0 + 10000.0) / 11.0;
    double ss = 10 * (100.0 - mean) * (100.0 - mean) + (10000.0 - mean) * (10000.0 - mean);
    const double sd = std::sqrt(ss / 10.0);
    CHECK(r.mean_tic == doctest::Approx(mean));
    CHECK(r.sd_tic == doctest::Approx(sd));
    CHECK(r.z_score[10] == doctest::Approx((10000.0 - mean) / sd));

    cfg.qc_sd_limit = std::numeric_limits<double>::infinity();
    CHECK(qc_filter(batch, cfg).excluded.empty());

    std::vector<Spectrum> same(5, make_spectrum({3.0, 4.0}));
    CHECK(qc_filter(same, PipelineConfig{}).excluded.empty());
    CHECK_THROWS_AS(qc_filter({make_spectrum({1.0, 2.0})}, cfg), Error);
}

TEST_CASE("peak detection") {
    std::vector<double> ramp(50);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i);
    CHECK(detect_peaks(ramp).empty());

    std::vector<double> tri(41);
    for (std::size_t i = 0; i < tri.size(); ++i) tri[i] = 20.0 - std::abs(static_cast<double>(i) - 17.0);
    CHECK(detect_peaks(tri) == std::vector<std::size_t>{17});

    const auto two = testing::bumps(300, {80.3, 201.7}, 5.0);
    const auto found = detect_peaks(two);
    REQUIRE(found.size() == 2);
    CHECK(std::abs(static_cast<double>(found[0]) - 80.3) <= 1.0);
    CHECK(std::abs(static_cast<double>(found[1]) - 201.7) <= 1.0);

    std::vector<double> plateau{0, 1, 3, 3, 3, 1, 0, 0};
    CHECK(detect_peaks(plateau) == std::vector<std::size_t>{3});
}

TEST_CASE("DP peak matching equals exhaustive enumeration") {
    Rng rng(6);
    for (int inst = 0; inst < 100; ++inst) {
        PipelineConfig cfg;
        cfg.match_bandwidth = 5.0 + 20.0 * uniform01(rng);
        cfg.gap_penalty = inst % 3 == 0 ? 0.0 : 0.5 * uniform01(rng);
        const auto ref = sorted_positions(rng, 1 + uniform_index(rng, 6), 200.0);
        const auto tgt = sorted_positions(rng, 1 + uniform_index(rng, 6), 200.0);
        const auto m = match_peaks(ref, tgt, cfg);
        CHECK(m.score == doctest::Approx(oracle::exhaustive_match(ref, tgt, cfg)).epsilon(1e-12));
        for (std::size_t i = 1; i < m.pairs.size(); ++i) {
            CHECK(m.pairs[i].first > m.pairs[i - 1].first);
            CHECK(m.pairs[i].second > m.pairs[i - 1].second);
        }
        const auto swapped = match_peaks(tgt, ref, cfg);
        CHECK(swapped.score == doctest::Approx(m.score).epsilon(1e-12));
    }
}

TEST_CASE("self-alignment is the identity") {
    PipelineConfig cfg;
    const auto s = make_spectrum(testing::bumps(500, {100.0, 250.0, 400.0}, 4.0));
    const auto r = align(s, s, cfg);
    CHECK(r.alignment.pairs.size() == 3);
    for (auto [a, b] : r.alignment.pairs) CHECK(a == b);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(r.warped.intensity[i] - s.intensity[i]) <= 1e-9);
}

TEST_CASE("alignment recovers a constant shift") {
    PipelineConfig cfg;
    cfg.match_bandwidth = 50.0;
    const auto ref = make_spectrum(testing::bumps(600, {100.0, 220.0, 350.0, 480.0}, 5.0));
    const auto tgt = make_spectrum(testing::bumps(600, {103.0, 223.0, 353.0, 483.0}, 5.0));
    const auto r = align(tgt, ref, cfg);
    REQUIRE(r.alignment.pairs.size() == 4);
    for (auto [a, b] : r.alignment.pairs) CHECK(b == a + 3);
    // Between the outer anchors the warp is a pure shift; outside it is pinned to the grid ends.
    for (std::size_t i = 100; i <= 480; ++i) CHECK(std::abs(r.warped.intensity[i] - ref.intensity[i]) <= 1e-9);
    for (double x = 1000.0; x <= 6990.0; x += 7.0) {
        CHECK(r.alignment.warp(x) <= r.alignment.warp(x + 7.0));
        CHECK(r.alignment.unwarp(r.alignment.warp(x)) == doctest::Approx(x).epsilon(1e-12));
    }
}

TEST_CASE("alignment without peaks falls back to the identity") {
    PipelineConfig cfg;
    const auto flat = make_spectrum(std::vector<double>(100, 1.0));
    const auto ref = make_spectrum(testing::bumps(100, {50.0}, 3.0));
    const auto r = align(flat, ref, cfg);
    CHECK(r.alignment.no_peaks);
    CHECK(r.alignment.pairs.empty());
    CHECK(r.warped.intensity == flat.intensity);
}

TEST_CASE("interpolation clamps at the ends") {
    const std::vector<double> x{0.0, 1.0, 3.0}, y{0.0, 10.0, 30.0};
    CHECK(interpolate(x, y, -1.0) == 0.0);
    CHECK(interpolate(x, y, 2.0) == doctest::Approx(20.0));
    CHECK(interpolate(x, y, 9.0) == 30.0);
}

TEST_CASE("spectrum and config validation") {
    Spectrum bad = make_spectrum({1.0, 2.0});
    bad.mz[1] = bad.mz[0];
    CHECK_THROWS_AS(bad.validate(), Error);
    PipelineConfig cfg;
    cfg.tic_lo = 5.0;
    cfg.tic_hi = 1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    PipelineConfig even;
    even.baseline_window = 200;
    CHECK(even.effective_baseline_window() == 201);
}
