#include "biofuse/synth.hpp"

#include "biofuse/error.hpp"
#include "biofuse/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

namespace biofuse {

using nlohmann::json;

namespace {

constexpr std::uint64_t kLayoutStream = 0xA11;
constexpr std::uint64_t kLabelStream = 0x1AB;
constexpr std::uint64_t kSpectrumStream = 0x10000;
constexpr std::uint64_t kPanelStream = 0x20000;
constexpr double kInteractionMargin = 0.5;
constexpr double kThreshold = 1.0;
constexpr double kControlShrink = 0.4;

std::string sample_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "S%03zu", i + 1);
    return buf;
}

double normal(Rng& rng) {
    // Box-Muller on our own uniforms so output does not depend on the
    // standard library's distribution implementation.
    double u1;
    do u1 = uniform01(rng);
    while (u1 <= 0.0);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double sign(double v) { return v < 0.0 ? -1.0 : 1.0; }

} // namespace

void SynthConfig::validate() const {
    auto bad = [](const std::string& m) { fail(ErrorCode::ConfigInvalid, "synth: " + m); };
    if (n_samples < 4) bad("n_samples must be at least 4");
    if (n_cases == 0 || n_cases >= n_samples) bad("n_cases must lie in [1, n_samples)");
    if (spectral_grid_size < 16) bad("spectral_grid_size must be at least 16");
    if (!(mz_lo > 0.0 && mz_hi > mz_lo)) bad("need 0 < mz_lo < mz_hi");
    if (n_true_peaks == 0) bad("n_true_peaks must be positive");
    if (!(peak_width > 0.0)) bad("peak_width must be positive");
    if (!(peak_correlation >= 0.0 && peak_correlation < 1.0)) bad("peak_correlation must lie in [0, 1)");
    if (!(amplitude_cv >= 0.0)) bad("amplitude_cv must be non-negative");
    if (!(linear_effect_size >= 0.0)) bad("linear_effect_size must be non-negative");
    if (!(effect_fraction >= 0.0 && effect_fraction <= 1.0)) bad("effect_fraction must lie in [0, 1]");
    if (!(baseline_amplitude >= 0.0 && baseline_decay > 0.0)) bad("baseline parameters out of range");
    if (!(mz_jitter >= 0.0)) bad("mz_jitter must be non-negative");
    if (!(noise_sd >= 0.0)) bad("noise_sd must be non-negative");
    if (n_panel_features < 4) bad("n_panel_features must be at least 4");
    if (!(panel_effect >= 0.0 && panel_effect <= 1.0)) bad("panel_effect must lie in [0, 1]");
    const double slot = static_cast<double>(spectral_grid_size) / static_cast<double>(n_true_peaks);
    if (slot < 4.0 * peak_width) bad("too many peaks for the grid at this peak_width");
}

std::string SynthConfig::to_json() const {
    const json j = {{"format", "biofuse.synth"},
                    {"version", 1},
                    {"n_samples", n_samples},
                    {"n_cases", n_cases},
                    {"spectral_grid_size", spectral_grid_size},
                    {"mz_lo", mz_lo},
                    {"mz_hi", mz_hi},
                    {"n_true_peaks", n_true_peaks},
                    {"peak_width", peak_width},
                    {"peak_correlation", peak_correlation},
                    {"amplitude_cv", amplitude_cv},
                    {"linear_effect_size", linear_effect_size},
                    {"effect_fraction", effect_fraction},
                    {"baseline_amplitude", baseline_amplitude},
                    {"baseline_decay", baseline_decay},
                    {"mz_jitter", mz_jitter},
                    {"noise_sd", noise_sd},
                    {"n_panel_features", n_panel_features},
                    {"panel_effect", panel_effect},
                    {"seed", seed}};
    return j.dump(1);
}

SynthConfig SynthConfig::from_json(const std::string& text) {
    SynthConfig c;
    try {
        const json j = json::parse(text);
        if (!j.is_object()) fail(ErrorCode::ConfigInvalid, "synth config must be a JSON object");
        for (const auto& [key, v] : j.items()) {
            if (key == "format") {
                if (v.get<std::string>() != "biofuse.synth") fail(ErrorCode::ConfigInvalid, "not a synth config");
            } else if (key == "version") {
                if (v.get<int>() != 1) fail(ErrorCode::ConfigInvalid, "unsupported synth config version");
            } else if (key == "n_samples") c.n_samples = v.get<std::size_t>();
            else if (key == "n_cases") c.n_cases = v.get<std::size_t>();
            else if (key == "spectral_grid_size") c.spectral_grid_size = v.get<std::size_t>();
            else if (key == "mz_lo") c.mz_lo = v.get<double>();
            else if (key == "mz_hi") c.mz_hi = v.get<double>();
            else if (key == "n_true_peaks") c.n_true_peaks = v.get<std::size_t>();
            else if (key == "peak_width") c.peak_width = v.get<double>();
            else if (key == "peak_correlation") c.peak_correlation = v.get<double>();
            else if (key == "amplitude_cv") c.amplitude_cv = v.get<double>();
            else if (key == "linear_effect_size") c.linear_effect_size = v.get<double>();
            else if (key == "effect_fraction") c.effect_fraction = v.get<double>();
            else if (key == "baseline_amplitude") c.baseline_amplitude = v.get<double>();
            else if (key == "baseline_decay") c.baseline_decay = v.get<double>();
            else if (key == "mz_jitter") c.mz_jitter = v.get<double>();
            else if (key == "noise_sd") c.noise_sd = v.get<double>();
            else if (key == "n_panel_features") c.n_panel_features = v.get<std::size_t>();
            else if (key == "panel_effect") c.panel_effect = v.get<double>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else fail(ErrorCode::ConfigInvalid, "synth: unknown key '" + key + "'");
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::ConfigInvalid, std::string("synth config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string SynthTruth::to_json(const SynthConfig& cfg) const {
    json amps = json::array();
    for (std::size_t i = 0; i < log_amplitude.rows(); ++i) {
        auto r = log_amplitude.row(i);
        amps.push_back(std::vector<double>(r.begin(), r.end()));
    }
    const json j = {{"format", "biofuse.truth"},
                    {"version", 1},
                    {"config", json::parse(cfg.to_json())},
                    {"peak_index", peak_index},
                    {"peak_mz", peak_mz},
                    {"base_amplitude", base_amplitude},
                    {"effect_direction", effect_direction},
                    {"loading", loading},
                    {"log_amplitude", std::move(amps)},
                    {"informative_panel", informative_panel},
                    {"interaction_panel", interaction_panel},
                    {"threshold_panel", threshold_panel}};
    return j.dump(1);
}

SynthData generate(const SynthConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.n_samples;
    const std::size_t G = cfg.spectral_grid_size;
    const std::size_t K = cfg.n_true_peaks;
    const double spacing = (cfg.mz_hi - cfg.mz_lo) / static_cast<double>(G - 1);

    SynthData out;
    SynthTruth& truth = out.truth;

    // Fixed layout: evenly spaced slots with jitter, away from the grid ends.
    Rng layout(derive_seed(cfg.seed, kLayoutStream));
    const double margin = std::max(20.0, 6.0 * cfg.peak_width);
    const double span = static_cast<double>(G - 1) - 2.0 * margin;
    const double slot = K > 1 ? span / static_cast<double>(K - 1) : 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double jitter = (uniform01(layout) - 0.5) * 0.4 * slot;
        const double pos = K > 1 ? margin + slot * static_cast<double>(k) + jitter : 0.5 * static_cast<double>(G - 1);
        const auto idx = static_cast<std::size_t>(std::llround(pos));
        truth.peak_index.push_back(idx);
        truth.peak_mz.push_back(cfg.mz_lo + spacing * static_cast<double>(idx));
        truth.base_amplitude.push_back(std::exp(std::log(4.0) + uniform01(layout) * std::log(4.0)));
    }
    truth.effect_direction.assign(K, 0);
    {
        std::vector<std::size_t> order(K);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = K; i > 1; --i) std::swap(order[i - 1], order[uniform_index(layout, i)]);
        const auto m = static_cast<std::size_t>(std::llround(cfg.effect_fraction * static_cast<double>(K)));
        order.resize(m);
        for (std::size_t i = 0; i < m; ++i) truth.effect_direction[order[i]] = (i % 2 == 0) ? 1 : -1;
    }
    // Nuisance loadings alternate in m/z order so the shared factor largely
    // cancels in the total ion current.
    truth.loading.resize(K);
    for (std::size_t k = 0; k < K; ++k) truth.loading[k] = (k % 2 == 0) ? 1 : -1;

    // Balanced labels in shuffled order.
    out.labels.assign(n, Label::Control);
    std::fill(out.labels.begin(), out.labels.begin() + static_cast<std::ptrdiff_t>(cfg.n_cases), Label::Case);
    {
        Rng rng(derive_seed(cfg.seed, kLabelStream));
        for (std::size_t i = n; i > 1; --i) std::swap(out.labels[i - 1], out.labels[uniform_index(rng, i)]);
    }

    std::vector<double> grid(G);
    for (std::size_t g = 0; g < G; ++g) grid[g] = cfg.mz_lo + spacing * static_cast<double>(g);

    const double sr = std::sqrt(cfg.peak_correlation);
    const double si = std::sqrt(1.0 - cfg.peak_correlation);
    const double width_da = cfg.peak_width * spacing;
    const auto reach = static_cast<std::ptrdiff_t>(std::ceil(6.0 * cfg.peak_width)) + 2;
    truth.log_amplitude = Matrix(n, K);
    out.spectra.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(cfg.seed, kSpectrumStream + i));
        const double cls = is_case(out.labels[i]) ? 0.5 : -0.5;
        const double common = normal(rng);
        const double shift = cfg.mz_jitter * normal(rng);
        Spectrum& s = out.spectra[i];
        s.sample_id = sample_id(i);
        s.mz = grid;
        s.intensity.resize(G);
        for (std::size_t g = 0; g < G; ++g)
            s.intensity[g] = cfg.baseline_amplitude * std::exp(-(grid[g] - cfg.mz_lo) / cfg.baseline_decay);
        for (std::size_t k = 0; k < K; ++k) {
            const double z = sr * common * static_cast<double>(truth.loading[k]) + si * normal(rng) +
                             cls * cfg.linear_effect_size * static_cast<double>(truth.effect_direction[k]);
            const double la = std::log(truth.base_amplitude[k]) + cfg.amplitude_cv * z;
            truth.log_amplitude(i, k) = la;
            const double amp = std::exp(la);
            const double centre = truth.peak_mz[k] + shift;
            const auto c = static_cast<std::ptrdiff_t>(truth.peak_index[k]);
            const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, c - reach);
            const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(G) - 1, c + reach);
            for (std::ptrdiff_t g = lo; g <= hi; ++g) {
                const double d = (grid[static_cast<std::size_t>(g)] - centre) / width_da;
                s.intensity[static_cast<std::size_t>(g)] += amp * std::exp(-0.5 * d * d);
            }
        }
        for (double& v : s.intensity) v += cfg.noise_sd * normal(rng);
    }

    // Panel: independent N(0,1) probes. Features 0 and 1 carry a sign
    // interaction; features 2 and 3 a two-sided threshold: affected cases sit
    // beyond +-1 on one of them, affected controls are pulled towards zero.
    const std::size_t P = cfg.n_panel_features;
    truth.interaction_panel = {0, 1};
    truth.threshold_panel = {2, 3};
    truth.informative_panel = {0, 1, 2, 3};
    Dataset& panel = out.panel;
    panel.X = Matrix(n, P);
    panel.y = out.labels;
    for (std::size_t j = 0; j < P; ++j) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "panel_%02zu", j + 1);
        panel.column_names.emplace_back(buf);
        panel.column_tags.push_back(SourceTag::Panel);
    }
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(cfg.seed, kPanelStream + i));
        panel.sample_ids.push_back(sample_id(i));
        auto row = panel.X.row(i);
        for (std::size_t j = 0; j < P; ++j) row[j] = normal(rng);
        const double cls = is_case(out.labels[i]) ? 1.0 : -1.0;
        const double u_xor = uniform01(rng);
        const double u_thr = uniform01(rng);
        const double u_pick = uniform01(rng);
        if (u_xor < cfg.panel_effect) {
            row[0] = sign(row[0]) * (kInteractionMargin + std::abs(row[0]));
            row[1] = sign(row[0]) * cls * (kInteractionMargin + std::abs(row[1]));
        }
        if (u_thr < cfg.panel_effect) {
            if (cls > 0) {
                const std::size_t j = u_pick < 0.5 ? 2 : 3;
                row[j] = sign(row[j]) * (kThreshold + std::abs(row[j]));
            } else {
                row[2] *= kControlShrink;
                row[3] *= kControlShrink;
            }
        }
    }
    return out;
}

} // namespace biofuse
