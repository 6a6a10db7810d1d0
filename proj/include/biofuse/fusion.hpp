#pragma once

#include "biofuse/dataset.hpp"
#include "biofuse/models.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace biofuse {

enum class FusionStrategy { DataMerge, ModelInclusion, ModelComposition };

const char* to_string(FusionStrategy s) noexcept;

/// The two data sources of a fusion. In the experiment runner A is the
/// spectral source and B the panel source.
enum class SourceId { A, B };

/// How level-one soft scores are produced for the training rows.
struct ScoreMode {
    enum class Kind { InSample, OutOfFold };
    Kind kind = Kind::InSample;
    int folds = 5;

    bool operator==(const ScoreMode&) const = default;
};

/// DataMerge: base = {model}.
/// ModelInclusion: base = {model on score_source}, second = target model on the other source.
/// ModelComposition: base = {model on A, model on B}, second = level-two model.
struct FusionSpec {
    FusionStrategy strategy = FusionStrategy::ModelComposition;
    std::vector<ModelSpec> base;
    std::optional<ModelSpec> second;
    SourceId score_source = SourceId::A;
    ScoreMode score_mode;
    std::uint64_t fold_seed = 0;

    /// Throws ConfigInvalid when the model list does not fit the strategy.
    void validate() const;
};

/// A trained fusion pipeline. Immutable after training.
struct FusedModel {
    FusionStrategy strategy = FusionStrategy::DataMerge;
    std::vector<TrainedModel> base;
    std::optional<TrainedModel> second;
    SourceId score_source = SourceId::A;
    std::size_t dim_a = 0;
    std::size_t dim_b = 0;
    /// Training matrix the final model was fitted on (merged, augmented, or n x 2 scores).
    Dataset final_training;

    [[nodiscard]] double predict_score(std::span<const double> xa, std::span<const double> xb) const;
    [[nodiscard]] Label predict_label(std::span<const double> xa, std::span<const double> xb) const;
    /// Model whose score is the pipeline output.
    [[nodiscard]] const TrainedModel& final_model() const;
};

/// Column concatenation of two sample-matched datasets. An empty dataset
/// (no columns) is the identity. Throws SampleMismatch.
Dataset data_merge(const Dataset& a, const Dataset& b);

/// Soft scores of a model of the given spec for every row of d, either from
/// one fit on all rows or from k-fold held-out fits.
std::vector<double> level_one_scores(const Dataset& d, const ModelSpec& spec, const ScoreMode& mode,
                                     std::uint64_t fold_seed);

FusedModel train_merge(const FusionSpec& spec, const Dataset& a, const Dataset& b);
FusedModel train_inclusion(const FusionSpec& spec, const Dataset& a, const Dataset& b);
FusedModel train_composition(const FusionSpec& spec, const Dataset& a, const Dataset& b);
/// Dispatches on spec.strategy.
FusedModel train_fusion(const FusionSpec& spec, const Dataset& a, const Dataset& b);

/// Welch two-sample t statistic (case minus control) for every column.
std::vector<double> welch_t_statistics(const Dataset& d);

/// Indices of the k columns with the largest |t|, ties to the lower index,
/// returned in ascending column order. Throws SingleClass / KTooLarge.
std::vector<std::size_t> t_test_rank(const Dataset& d, std::size_t k);

Dataset t_test_select(const Dataset& d, std::size_t k);

} // namespace biofuse
