#pragma once

#include "biofuse/dataset.hpp"
#include "biofuse/spectra.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace biofuse::io {

/// Throws Io when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Shortest round-trip decimal form.
std::string format_double(double v);

/// Header `mz,<id1>,<id2>,...`; one row per grid point. Throws GridMismatch
/// when the spectra do not share one m/z grid.
std::string spectra_to_csv(const std::vector<Spectrum>& batch);
std::vector<Spectrum> spectra_from_csv(const std::string& text);

/// Header `sample_id,<col1>,...`; one row per sample.
std::string dataset_to_csv(const Dataset& d);
/// Columns get the given tag; labels are left empty.
Dataset dataset_from_csv(const std::string& text, SourceTag tag);

/// `sample_id,label`; labels written as 1 / -1, read as 1 / -1 / case / control.
std::string labels_to_csv(const std::vector<std::string>& ids, const std::vector<Label>& labels);
std::vector<std::pair<std::string, Label>> labels_from_csv(const std::string& text);

} // namespace biofuse::io
