#include "biofuse/dataset.hpp"

#include "biofuse/error.hpp"

#include <cmath>

namespace biofuse {

const char* to_string(SourceTag tag) noexcept {
    switch (tag) {
    case SourceTag::Spectral: return "SPECTRAL";
    case SourceTag::Panel: return "PANEL";
    case SourceTag::Score: return "SCORE";
    }
    return "?";
}

SourceTag source_tag_from_string(const std::string& s) {
    if (s == "SPECTRAL") return SourceTag::Spectral;
    if (s == "PANEL") return SourceTag::Panel;
    if (s == "SCORE") return SourceTag::Score;
    fail(ErrorCode::Parse, "unknown source tag '" + s + "'");
}

std::vector<double> Matrix::column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
}

std::size_t Dataset::count(Label l) const noexcept {
    std::size_t k = 0;
    for (Label v : y) k += (v == l);
    return k;
}

void Dataset::validate() const {
    if (!y.empty() && y.size() != X.rows())
        fail(ErrorCode::InvalidInput, "label count does not match row count");
    if (column_tags.size() != X.cols() || column_names.size() != X.cols())
        fail(ErrorCode::InvalidInput, "column metadata does not match column count");
    if (!sample_ids.empty() && sample_ids.size() != X.rows())
        fail(ErrorCode::InvalidInput, "sample id count does not match row count");
    for (double v : X.data())
        if (!std::isfinite(v)) fail(ErrorCode::InvalidInput, "dataset contains non-finite values");
}

void Dataset::require_trainable() const {
    if (y.size() != X.rows()) fail(ErrorCode::InvalidInput, "training data needs one label per row");
    if (X.rows() < 2 || count(Label::Case) == 0 || count(Label::Control) == 0)
        fail(ErrorCode::SingleClass, "training data must contain both classes");
}

Dataset Dataset::rows(std::span<const std::size_t> idx) const {
    Dataset out;
    out.X = Matrix(idx.size(), X.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        auto src = X.row(idx[r]);
        std::copy(src.begin(), src.end(), out.X.row(r).begin());
        if (!y.empty()) out.y.push_back(y[idx[r]]);
        if (!sample_ids.empty()) out.sample_ids.push_back(sample_ids[idx[r]]);
    }
    out.column_tags = column_tags;
    out.column_names = column_names;
    return out;
}

Dataset Dataset::columns(std::span<const std::size_t> idx) const {
    Dataset out;
    for (std::size_t c : idx)
        if (c >= X.cols()) fail(ErrorCode::DimensionMismatch, "column index out of range");
    out.X = Matrix(X.rows(), idx.size());
    for (std::size_t r = 0; r < X.rows(); ++r)
        for (std::size_t c = 0; c < idx.size(); ++c) out.X(r, c) = X(r, idx[c]);
    for (std::size_t c : idx) {
        out.column_tags.push_back(column_tags[c]);
        out.column_names.push_back(column_names[c]);
    }
    out.y = y;
    out.sample_ids = sample_ids;
    return out;
}

void Dataset::append_column(std::span<const double> values, SourceTag tag, std::string name) {
    if (values.size() != X.rows())
        fail(ErrorCode::DimensionMismatch, "appended column length does not match row count");
    Matrix grown(X.rows(), X.cols() + 1);
    for (std::size_t r = 0; r < X.rows(); ++r) {
        auto src = X.row(r);
        std::copy(src.begin(), src.end(), grown.row(r).begin());
        grown(r, X.cols()) = values[r];
    }
    X = std::move(grown);
    column_tags.push_back(tag);
    column_names.push_back(std::move(name));
}

} // namespace biofuse
