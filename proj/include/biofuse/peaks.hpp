#pragma once

#include "biofuse/dataset.hpp"
#include "biofuse/spectra.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace biofuse {

/// Peak locations learned from a training mean profile.
struct PeakModel {
    std::vector<std::size_t> peak_indices; ///< ascending grid indices
    std::vector<double> peak_mz;
    std::size_t neighborhood = 5; ///< half-width in index points
    std::vector<double> grid;     ///< training m/z grid the indices refer to

    [[nodiscard]] std::size_t n_peaks() const noexcept { return peak_indices.size(); }

    [[nodiscard]] std::string to_json() const;
    static PeakModel from_json(const std::string& text);

    bool operator==(const PeakModel&) const = default;
};

/// Pointwise mean intensity. Throws EmptyTrainingSet / GridMismatch.
Spectrum mean_profile(const std::vector<Spectrum>& training);

/// Peaks of the (smoothed) mean profile; peaks closer than 2*neighborhood are
/// merged, keeping the higher apex. Throws NoPeaksFound.
PeakModel build_peak_model(const Spectrum& mean, std::size_t neighborhood = 5);

/// Windowed mean intensity around each peak, one SPECTRAL column per peak.
/// Labels are left empty. Throws GridMismatch.
Dataset extract_features(const std::vector<Spectrum>& batch, const PeakModel& pm);

/// Column name used for a peak at the given m/z.
std::string peak_column_name(double mz);

} // namespace biofuse
