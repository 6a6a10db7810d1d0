#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace biofuse {

enum class Label : int { Control = -1, Case = 1 };

inline int sign_of(Label l) noexcept { return static_cast<int>(l); }
inline bool is_case(Label l) noexcept { return l == Label::Case; }

/// Where a feature column came from.
enum class SourceTag { Spectral, Panel, Score };

const char* to_string(SourceTag tag) noexcept;
SourceTag source_tag_from_string(const std::string& s);

/// Dense row-major matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }
    [[nodiscard]] std::span<double> row(std::size_t r) noexcept {
        return {data_.data() + r * cols_, cols_};
    }
    [[nodiscard]] std::vector<double> column(std::size_t c) const;

    [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Feature matrix with labels and per-column provenance.
struct Dataset {
    Matrix X;
    std::vector<Label> y;
    std::vector<SourceTag> column_tags;
    std::vector<std::string> column_names;
    std::vector<std::string> sample_ids;

    [[nodiscard]] std::size_t n_samples() const noexcept { return X.rows(); }
    [[nodiscard]] std::size_t n_features() const noexcept { return X.cols(); }

    [[nodiscard]] std::size_t count(Label l) const noexcept;

    /// Checks shape consistency and finiteness; throws InvalidInput.
    void validate() const;

    /// Throws SingleClass unless there are >= 2 samples covering both classes.
    void require_trainable() const;

    [[nodiscard]] Dataset rows(std::span<const std::size_t> idx) const;
    [[nodiscard]] Dataset columns(std::span<const std::size_t> idx) const;

    /// Appends one column; values.size() must equal n_samples().
    void append_column(std::span<const double> values, SourceTag tag, std::string name);
};

} // namespace biofuse
