#pragma once

#include "biofuse/dataset.hpp"
#include "biofuse/spectra.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace biofuse {

struct SynthConfig {
    std::size_t n_samples = 106;
    std::size_t n_cases = 53;

    // Spectral source.
    std::size_t spectral_grid_size = 1554;
    double mz_lo = 1000.0;
    double mz_hi = 21000.0;
    std::size_t n_true_peaks = 60;
    double peak_width = 3.0;          ///< Gaussian sigma, index points
    double peak_correlation = 0.93;   ///< |rho| between latent peak amplitudes, signed by loading
    double amplitude_cv = 0.3;        ///< log-amplitude scale
    double linear_effect_size = 0.22; ///< class shift of each effect peak, latent SD units
    double effect_fraction = 0.8;     ///< share of peaks carrying the class shift
    double baseline_amplitude = 30.0;
    double baseline_decay = 4000.0;   ///< Daltons
    double mz_jitter = 4.0;           ///< per-sample calibration shift SD, Daltons
    double noise_sd = 0.5;

    // Panel source.
    std::size_t n_panel_features = 30;
    double panel_effect = 1.0;        ///< share of samples following the interaction/threshold rules

    std::uint64_t seed = 0;

    /// Throws ConfigInvalid.
    void validate() const;
    [[nodiscard]] std::string to_json() const;
    /// Missing keys keep their defaults; unknown keys are rejected.
    static SynthConfig from_json(const std::string& text);
};

struct SynthTruth {
    std::vector<std::size_t> peak_index; ///< apex grid index of each true peak
    std::vector<double> peak_mz;
    std::vector<double> base_amplitude;
    std::vector<int> effect_direction; ///< -1, 0 or +1 per peak
    std::vector<int> loading;          ///< sign of each peak on the shared factor
    Matrix log_amplitude;              ///< samples x peaks, before the calibration shift
    std::vector<std::size_t> informative_panel;
    std::vector<std::size_t> interaction_panel; ///< the two XOR features
    std::vector<std::size_t> threshold_panel;   ///< the thresholded-marginal features

    [[nodiscard]] std::string to_json(const SynthConfig& cfg) const;
};

struct SynthData {
    std::vector<Spectrum> spectra; ///< raw, shared m/z grid
    Dataset panel;                 ///< PANEL-tagged, labels filled
    std::vector<Label> labels;
    SynthTruth truth;
};

/// Deterministic in cfg (including seed).
SynthData generate(const SynthConfig& cfg);

} // namespace biofuse
