#include "biofuse/spectra.hpp"

#include "biofuse/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace biofuse {

void Spectrum::validate() const {
    if (mz.size() != intensity.size())
        fail(ErrorCode::InvalidInput, "spectrum '" + sample_id + "': m/z and intensity lengths differ");
    if (mz.size() < 2)
        fail(ErrorCode::InvalidInput, "spectrum '" + sample_id + "': needs at least two points");
    for (std::size_t i = 1; i < mz.size(); ++i)
        if (!(mz[i] > mz[i - 1]))
            fail(ErrorCode::InvalidInput, "spectrum '" + sample_id + "': m/z must be strictly increasing");
    for (double v : intensity)
        if (!std::isfinite(v)) fail(ErrorCode::InvalidInput, "spectrum '" + sample_id + "': non-finite intensity");
}

void PipelineConfig::validate() const {
    if (baseline_window < 3) fail(ErrorCode::ConfigInvalid, "baseline_window must be >= 3");
    if (!(smooth_sigma > 0.0)) fail(ErrorCode::ConfigInvalid, "smooth_sigma must be positive");
    if (!(tic_lo < tic_hi)) fail(ErrorCode::ConfigInvalid, "tic_lo must be below tic_hi");
    if (!(qc_sd_limit > 0.0)) fail(ErrorCode::ConfigInvalid, "qc_sd_limit must be positive");
    if (!(gap_penalty >= 0.0)) fail(ErrorCode::ConfigInvalid, "gap_penalty must be non-negative");
    if (!(match_bandwidth > 0.0)) fail(ErrorCode::ConfigInvalid, "match_bandwidth must be positive");
}

Spectrum variance_stabilize(const Spectrum& s) {
    Spectrum out = s;
    for (double& v : out.intensity) v = std::cbrt(v);
    return out;
}

std::vector<double> estimate_baseline(std::span<const double> x, int window) {
    const std::size_t n = x.size();
    const std::size_t half = static_cast<std::size_t>(window / 2);

    // Sliding minimum over [i - half, i + half] with a monotone deque of indices.
    std::vector<double> minima(n);
    std::deque<std::size_t> dq;
    std::size_t pushed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t hi = std::min(n - 1, i + half);
        while (pushed <= hi) {
            while (!dq.empty() && x[dq.back()] >= x[pushed]) dq.pop_back();
            dq.push_back(pushed++);
        }
        const std::size_t lo = i >= half ? i - half : 0;
        while (dq.front() < lo) dq.pop_front();
        minima[i] = x[dq.front()];
    }

    // Truncated window mean, summed left to right.
    std::vector<double> baseline(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n - 1, i + half);
        double sum = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) sum += minima[j];
        baseline[i] = sum / static_cast<double>(hi - lo + 1);
    }
    return baseline;
}

Spectrum correct_baseline(const Spectrum& s, const PipelineConfig& cfg) {
    const int window = cfg.effective_baseline_window();
    if (s.intensity.size() < static_cast<std::size_t>(cfg.baseline_window))
        fail(ErrorCode::SpectrumTooShort, "spectrum '" + s.sample_id + "' is shorter than the baseline window");
    Spectrum out = s;
    const auto baseline = estimate_baseline(s.intensity, window);
    for (std::size_t i = 0; i < out.intensity.size(); ++i) out.intensity[i] -= baseline[i];
    return out;
}

Spectrum smooth(const Spectrum& s, const PipelineConfig& cfg) {
    const double sigma = cfg.smooth_sigma;
    if (!(sigma > 0.0)) fail(ErrorCode::ConfigInvalid, "smooth_sigma must be positive");
    const auto reach = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * reach + 1));
    for (std::ptrdiff_t k = -reach; k <= reach; ++k)
        kernel[static_cast<std::size_t>(k + reach)] =
            std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));

    const auto n = static_cast<std::ptrdiff_t>(s.intensity.size());
    Spectrum out = s;
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - reach);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + reach);
        double acc = 0.0;
        double wsum = 0.0;
        for (std::ptrdiff_t j = lo; j <= hi; ++j) {
            const double w = kernel[static_cast<std::size_t>(j - i + reach)];
            acc += w * s.intensity[static_cast<std::size_t>(j)];
            wsum += w;
        }
        out.intensity[static_cast<std::size_t>(i)] = acc / wsum;
    }
    return out;
}

double windowed_tic(const Spectrum& s, const PipelineConfig& cfg) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.mz.size(); ++i)
        if (s.mz[i] >= cfg.tic_lo && s.mz[i] <= cfg.tic_hi) sum += s.intensity[i];
    return sum;
}

Spectrum normalize_tic(const Spectrum& s, const PipelineConfig& cfg, double target) {
    if (!(target > 0.0)) fail(ErrorCode::InvalidInput, "TIC target must be positive");
    const double tic = windowed_tic(s, cfg);
    if (!(tic > 0.0))
        fail(ErrorCode::ZeroTIC, "spectrum '" + s.sample_id + "' has non-positive TIC in the normalization window");
    const double scale = target / tic;
    Spectrum out = s;
    for (double& v : out.intensity) v *= scale;
    return out;
}

QcResult qc_filter(const std::vector<Spectrum>& batch, const PipelineConfig& cfg) {
    if (batch.size() < 2) fail(ErrorCode::BatchTooSmall, "QC needs at least two spectra");
    QcResult r;
    r.tic.reserve(batch.size());
    for (const auto& s : batch) r.tic.push_back(windowed_tic(s, cfg));
    const double n = static_cast<double>(batch.size());
    r.mean_tic = std::accumulate(r.tic.begin(), r.tic.end(), 0.0) / n;
    double ss = 0.0;
    for (double t : r.tic) ss += (t - r.mean_tic) * (t - r.mean_tic);
    r.sd_tic = std::sqrt(ss / (n - 1.0));

    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double dev = r.tic[i] - r.mean_tic;
        const double z = r.sd_tic > 0.0 ? dev / r.sd_tic : 0.0;
        const bool out = r.sd_tic > 0.0 && std::abs(dev) > cfg.qc_sd_limit * r.sd_tic;
        r.z_score.push_back(z);
        r.is_excluded.push_back(out);
        (out ? r.excluded : r.kept).push_back(batch[i]);
    }
    return r;
}

double peak_prominence(std::span<const double> x, std::size_t i) {
    const double apex = x[i];
    double left_min = apex;
    for (std::size_t j = i; j-- > 0;) {
        if (x[j] > apex) break;
        left_min = std::min(left_min, x[j]);
    }
    double right_min = apex;
    for (std::size_t j = i + 1; j < x.size(); ++j) {
        if (x[j] > apex) break;
        right_min = std::min(right_min, x[j]);
    }
    return apex - std::max(left_min, right_min);
}

std::vector<std::size_t> detect_peaks(std::span<const double> x) {
    std::vector<std::size_t> peaks;
    const std::size_t n = x.size();
    if (n < 3) return peaks;

    std::vector<double> absdiff(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) absdiff[i] = std::abs(x[i + 1] - x[i]);
    auto mid = absdiff.begin() + static_cast<std::ptrdiff_t>(absdiff.size() / 2);
    std::nth_element(absdiff.begin(), mid, absdiff.end());
    double median = *mid;
    if (absdiff.size() % 2 == 0) {
        const double below = *std::max_element(absdiff.begin(), mid);
        median = 0.5 * (median + below);
    }
    const double floor = 3.0 * median;

    std::size_t i = 1;
    while (i + 1 < n) {
        if (x[i] > x[i - 1]) {
            std::size_t j = i;
            while (j + 1 < n && x[j + 1] == x[i]) ++j;
            if (j + 1 < n && x[j + 1] < x[i]) {
                const std::size_t apex = (i + j) / 2;
                const double prom = peak_prominence(x, apex);
                if (prom > 0.0 && prom >= floor) peaks.push_back(apex);
            }
            i = j + 1;
        } else {
            ++i;
        }
    }
    return peaks;
}

double match_score(double mz_a, double mz_b, double bandwidth) noexcept {
    const double d = mz_a - mz_b;
    return std::exp(-d * d / (2.0 * bandwidth * bandwidth));
}

PeakMatching match_peaks(std::span<const double> ref_mz, std::span<const double> target_mz,
                         const PipelineConfig& cfg) {
    const std::size_t R = ref_mz.size();
    const std::size_t T = target_mz.size();
    const double gap = cfg.gap_penalty;
    const double cutoff = cfg.match_cutoff();
    const std::size_t W = R + 1;

    // best[t * W + r]: optimal score using the first t target and r reference peaks.
    std::vector<double> best((T + 1) * W, 0.0);
    for (std::size_t r = 1; r <= R; ++r) best[r] = best[r - 1] - gap;
    for (std::size_t t = 1; t <= T; ++t) {
        best[t * W] = best[(t - 1) * W] - gap;
        for (std::size_t r = 1; r <= R; ++r) {
            double v = std::max(best[(t - 1) * W + r] - gap, best[t * W + r - 1] - gap);
            if (std::abs(target_mz[t - 1] - ref_mz[r - 1]) <= cutoff)
                v = std::max(v, best[(t - 1) * W + r - 1] +
                                    match_score(target_mz[t - 1], ref_mz[r - 1], cfg.match_bandwidth));
            best[t * W + r] = v;
        }
    }

    PeakMatching m;
    m.score = best[T * W + R];
    std::size_t t = T, r = R;
    while (t > 0 && r > 0) {
        const double here = best[t * W + r];
        if (std::abs(target_mz[t - 1] - ref_mz[r - 1]) <= cutoff &&
            here == best[(t - 1) * W + r - 1] + match_score(target_mz[t - 1], ref_mz[r - 1], cfg.match_bandwidth)) {
            m.pairs.emplace_back(r - 1, t - 1);
            --t;
            --r;
        } else if (here == best[(t - 1) * W + r] - gap) {
            --t;
        } else {
            --r;
        }
    }
    std::reverse(m.pairs.begin(), m.pairs.end());
    return m;
}

double interpolate(std::span<const double> x, std::span<const double> y, double q) {
    if (q <= x.front()) return y.front();
    if (q >= x.back()) return y.back();
    const auto it = std::upper_bound(x.begin(), x.end(), q);
    const auto hi = static_cast<std::size_t>(it - x.begin());
    const std::size_t lo = hi - 1;
    const double t = (q - x[lo]) / (x[hi] - x[lo]);
    return y[lo] + t * (y[hi] - y[lo]);
}

double Alignment::warp(double mz) const {
    if (knots_from.size() < 2 || mz <= knots_from.front() || mz >= knots_from.back()) return mz;
    return interpolate(knots_from, knots_to, mz);
}

double Alignment::unwarp(double mz) const {
    if (knots_to.size() < 2 || mz <= knots_to.front() || mz >= knots_to.back()) return mz;
    return interpolate(knots_to, knots_from, mz);
}

AlignResult align(const Spectrum& target, const Spectrum& reference, const PipelineConfig& cfg) {
    target.validate();
    reference.validate();

    AlignResult result;
    Alignment& a = result.alignment;
    const double lo = std::min(target.mz.front(), reference.mz.front());
    const double hi = std::max(target.mz.back(), reference.mz.back());
    a.knots_from.push_back(lo);
    a.knots_to.push_back(lo);

    const auto tpeaks = detect_spectrum_peaks(target);
    const auto rpeaks = detect_spectrum_peaks(reference);
    if (tpeaks.empty() || rpeaks.empty()) {
        a.no_peaks = true;
    } else {
        std::vector<double> tmz, rmz;
        for (auto i : tpeaks) tmz.push_back(target.mz[i]);
        for (auto i : rpeaks) rmz.push_back(reference.mz[i]);
        const auto m = match_peaks(rmz, tmz, cfg);
        a.score = m.score;
        for (auto [rp, tp] : m.pairs) {
            a.pairs.emplace_back(rpeaks[rp], tpeaks[tp]);
            a.knots_from.push_back(tmz[tp]);
            a.knots_to.push_back(rmz[rp]);
        }
    }
    a.knots_from.push_back(hi);
    a.knots_to.push_back(hi);

    result.warped.sample_id = target.sample_id;
    result.warped.mz = reference.mz;
    result.warped.intensity.resize(reference.mz.size());
    for (std::size_t i = 0; i < reference.mz.size(); ++i)
        result.warped.intensity[i] = interpolate(target.mz, target.intensity, a.unwarp(reference.mz[i]));
    return result;
}

} // namespace biofuse
