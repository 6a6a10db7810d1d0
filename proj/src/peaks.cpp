#include "biofuse/peaks.hpp"

#include "biofuse/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>

namespace biofuse {

namespace {

bool same_grid(const std::vector<double>& a, const std::vector<double>& b) {
    return a == b;
}

} // namespace

std::string peak_column_name(double mz) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "peak_%.4f", mz);
    return buf;
}

Spectrum mean_profile(const std::vector<Spectrum>& training) {
    if (training.empty()) fail(ErrorCode::EmptyTrainingSet, "mean profile of an empty training set");
    Spectrum mean;
    mean.sample_id = "mean_profile";
    mean.mz = training.front().mz;
    mean.intensity.assign(mean.mz.size(), 0.0);
    for (const auto& s : training) {
        if (!same_grid(s.mz, mean.mz) || s.intensity.size() != mean.mz.size())
            fail(ErrorCode::GridMismatch, "spectrum '" + s.sample_id + "' is not on the shared grid");
        for (std::size_t i = 0; i < s.intensity.size(); ++i) mean.intensity[i] += s.intensity[i];
    }
    const double n = static_cast<double>(training.size());
    for (double& v : mean.intensity) v /= n;
    return mean;
}

PeakModel build_peak_model(const Spectrum& mean, std::size_t neighborhood) {
    auto found = detect_spectrum_peaks(mean);
    if (found.empty()) fail(ErrorCode::NoPeaksFound, "no peaks detected in the mean profile");

    // Highest apex first; a candidate survives if no kept peak lies closer than 2w.
    std::vector<std::size_t> order = found;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return mean.intensity[a] > mean.intensity[b];
    });
    std::vector<std::size_t> kept;
    for (std::size_t c : order) {
        const bool clash = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
            const std::size_t d = c > k ? c - k : k - c;
            return d < 2 * neighborhood;
        });
        if (!clash) kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end());

    PeakModel pm;
    pm.neighborhood = neighborhood;
    pm.grid = mean.mz;
    pm.peak_indices = kept;
    for (std::size_t i : kept) pm.peak_mz.push_back(mean.mz[i]);
    return pm;
}

Dataset extract_features(const std::vector<Spectrum>& batch, const PeakModel& pm) {
    Dataset d;
    const std::size_t p = pm.n_peaks();
    d.X = Matrix(batch.size(), p);
    const std::size_t w = pm.neighborhood;
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const auto& s = batch[r];
        if (!same_grid(s.mz, pm.grid) || s.intensity.size() != pm.grid.size())
            fail(ErrorCode::GridMismatch, "spectrum '" + s.sample_id + "' is not on the peak model grid");
        const std::size_t n = s.intensity.size();
        for (std::size_t j = 0; j < p; ++j) {
            const std::size_t c = pm.peak_indices[j];
            const std::size_t lo = c >= w ? c - w : 0;
            const std::size_t hi = std::min(n - 1, c + w);
            double sum = 0.0;
            for (std::size_t i = lo; i <= hi; ++i) sum += s.intensity[i];
            d.X(r, j) = sum / static_cast<double>(hi - lo + 1);
        }
        d.sample_ids.push_back(s.sample_id);
    }
    for (double mz : pm.peak_mz) {
        d.column_tags.push_back(SourceTag::Spectral);
        d.column_names.push_back(peak_column_name(mz));
    }
    return d;
}

std::string PeakModel::to_json() const {
    nlohmann::json j;
    j["format"] = "biofuse.peakmodel";
    j["version"] = 1;
    j["neighborhood"] = neighborhood;
    j["indices"] = peak_indices;
    j["mz"] = peak_mz;
    j["grid"] = grid;
    return j.dump(2);
}

PeakModel PeakModel::from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.value("format", "") != "biofuse.peakmodel")
            fail(ErrorCode::Parse, "not a peak model document");
        PeakModel pm;
        pm.neighborhood = j.at("neighborhood").get<std::size_t>();
        pm.peak_indices = j.at("indices").get<std::vector<std::size_t>>();
        pm.peak_mz = j.at("mz").get<std::vector<double>>();
        pm.grid = j.at("grid").get<std::vector<double>>();
        if (pm.peak_indices.size() != pm.peak_mz.size())
            fail(ErrorCode::Parse, "peak model index and m/z lists differ in length");
        for (std::size_t i = 0; i < pm.peak_indices.size(); ++i) {
            if (pm.peak_indices[i] >= pm.grid.size() || (i > 0 && pm.peak_indices[i] <= pm.peak_indices[i - 1]))
                fail(ErrorCode::Parse, "peak model indices must be ascending and on the grid");
        }
        return pm;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Parse, std::string("peak model: ") + e.what());
    }
}

} // namespace biofuse
