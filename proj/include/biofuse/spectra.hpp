#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace biofuse {

/// One sample's profile on an m/z axis.
struct Spectrum {
    std::vector<double> mz;        ///< strictly increasing, Daltons
    std::vector<double> intensity; ///< same length as mz
    std::string sample_id;

    [[nodiscard]] std::size_t size() const noexcept { return mz.size(); }

    /// Throws InvalidInput when the m/z axis or lengths are malformed.
    void validate() const;
};

/// Preprocessing parameters. Immutable once handed to the pipeline.
struct PipelineConfig {
    int baseline_window = 200;   ///< index points; even widths are widened by one
    double smooth_sigma = 5.0;   ///< index points
    double tic_lo = 1500.0;      ///< Daltons
    double tic_hi = 20000.0;     ///< Daltons
    double qc_sd_limit = 2.0;
    double gap_penalty = 0.0;
    double match_bandwidth = 25.0; ///< Daltons

    /// Throws ConfigInvalid on out-of-range values.
    void validate() const;

    /// Baseline window forced odd.
    [[nodiscard]] int effective_baseline_window() const noexcept {
        return baseline_window % 2 == 0 ? baseline_window + 1 : baseline_window;
    }

    /// Matches farther apart than this are not admissible in peak alignment.
    [[nodiscard]] double match_cutoff() const noexcept { return 4.0 * match_bandwidth; }
};

/// Peak correspondence between a target and a reference profile, and the
/// monotone piecewise-linear m/z map derived from it.
struct Alignment {
    /// (reference grid index, target grid index), strictly increasing in both.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    /// Warp knots, target m/z -> reference m/z, including the pinned grid ends.
    std::vector<double> knots_from;
    std::vector<double> knots_to;
    double score = 0.0;
    /// Set when either side had no detectable peaks; the warp is then the identity.
    bool no_peaks = false;

    /// Maps a target m/z onto the reference axis.
    [[nodiscard]] double warp(double mz) const;
    /// Inverse of warp().
    [[nodiscard]] double unwarp(double mz) const;
};

struct AlignResult {
    Alignment alignment;
    Spectrum warped; ///< target resampled onto the reference grid
};

/// Result of matching two ascending peak position lists.
struct PeakMatching {
    std::vector<std::pair<std::size_t, std::size_t>> pairs; ///< (ref position, target position)
    double score = 0.0;
};

struct QcResult {
    std::vector<Spectrum> kept;
    std::vector<Spectrum> excluded;
    std::vector<double> tic;     ///< per input spectrum, input order
    std::vector<double> z_score; ///< per input spectrum, input order
    std::vector<bool> is_excluded;
    double mean_tic = 0.0;
    double sd_tic = 0.0;
};

/// Signed cube root of every intensity.
Spectrum variance_stabilize(const Spectrum& s);

/// Moving-window baseline: centered window minimum, then centered window mean,
/// both with the same width and truncated at the edges.
std::vector<double> estimate_baseline(std::span<const double> intensity, int window);

/// Subtracts estimate_baseline(); negative results are kept.
Spectrum correct_baseline(const Spectrum& s, const PipelineConfig& cfg);

/// Gaussian kernel truncated at 4 sigma, renormalized at every position.
Spectrum smooth(const Spectrum& s, const PipelineConfig& cfg);

/// Sum of intensities with m/z inside [tic_lo, tic_hi].
double windowed_tic(const Spectrum& s, const PipelineConfig& cfg);

/// Scales intensities so the windowed TIC equals target. Throws ZeroTIC.
Spectrum normalize_tic(const Spectrum& s, const PipelineConfig& cfg, double target);

/// Excludes spectra whose TIC is more than qc_sd_limit sample SDs from the
/// batch mean. Throws BatchTooSmall for fewer than two spectra.
QcResult qc_filter(const std::vector<Spectrum>& batch, const PipelineConfig& cfg);

/// Topographic prominence of the sample at index i.
double peak_prominence(std::span<const double> x, std::size_t i);

/// Local maxima (first difference going + to -, plateaus resolved to their
/// midpoint) whose prominence is at least 3x the median absolute first difference.
std::vector<std::size_t> detect_peaks(std::span<const double> x);

inline std::vector<std::size_t> detect_spectrum_peaks(const Spectrum& s) {
    return detect_peaks(s.intensity);
}

/// Gaussian similarity of two peak positions.
double match_score(double mz_a, double mz_b, double bandwidth) noexcept;

/// Monotone peak matching maximizing total match score minus gap penalties.
PeakMatching match_peaks(std::span<const double> ref_mz, std::span<const double> target_mz,
                         const PipelineConfig& cfg);

/// Aligns target onto reference by peak matching and piecewise-linear warping.
AlignResult align(const Spectrum& target, const Spectrum& reference, const PipelineConfig& cfg);

/// Linear interpolation of (x, y) at q, clamped to the end values.
double interpolate(std::span<const double> x, std::span<const double> y, double q);

} // namespace biofuse
