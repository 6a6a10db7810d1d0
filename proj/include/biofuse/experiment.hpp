#pragma once

#include "biofuse/dataset.hpp"
#include "biofuse/eval.hpp"
#include "biofuse/fusion.hpp"
#include "biofuse/models.hpp"
#include "biofuse/peaks.hpp"
#include "biofuse/spectra.hpp"
#include "biofuse/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace biofuse {

/// Source A is the spectral profile, B the panel.
enum class SourceSelection { A, B, Merged };

const char* to_string(SourceSelection s) noexcept;

struct PipelineSpec {
    std::string id;
    SourceSelection source = SourceSelection::A;
    /// Welch t-test selection of the k best spectral columns, per training split.
    std::optional<std::size_t> ttest_k;
    std::optional<ModelSpec> model;
    std::optional<FusionSpec> fusion;

    /// Exactly one of model / fusion. Throws ConfigInvalid.
    void validate() const;
};

struct Comparison {
    std::string a;
    std::string b;
    Metric metric = Metric::Auc;
};

struct ExperimentConfig {
    std::filesystem::path spectra_path;
    std::filesystem::path panel_path;
    std::filesystem::path labels_path;
    PipelineConfig preprocess;
    std::size_t neighborhood = 5;
    bool apply_qc = true;
    std::vector<PipelineSpec> pipelines;
    SplitParams split;
    std::vector<Comparison> comparisons;

    /// Unique ids, valid specs. Throws ConfigInvalid.
    void validate() const;
    /// Relative input paths are resolved against base_dir.
    static ExperimentConfig from_json(const std::string& text, const std::filesystem::path& base_dir = {});
    [[nodiscard]] std::string to_json() const;
};

ModelSpec model_spec_from_json(const std::string& text);
std::string model_spec_to_json(const ModelSpec& spec);
PipelineConfig pipeline_config_from_json(const std::string& text);
std::string pipeline_config_to_json(const PipelineConfig& cfg);

/// Steps that depend on one spectrum only: stabilize, baseline, smooth.
Spectrum per_sample_preprocess(const Spectrum& raw, const PipelineConfig& cfg);

struct SplitFeatures {
    PeakModel peak_model;
    Dataset features; ///< every sample, SPECTRAL-tagged, labels empty
    std::vector<bool> no_peaks; ///< per sample alignment flag
};

/// Training-derived steps: TIC normalisation to the training mean, alignment
/// to the training mean profile, peak model from the aligned training mean,
/// features for every sample.
SplitFeatures featurize_split(const std::vector<Spectrum>& processed, std::span<const std::size_t> train,
                              const PipelineConfig& cfg, std::size_t neighborhood);

/// Both sources after per-sample preprocessing and QC, matched by sample id.
struct ExperimentData {
    std::vector<Spectrum> spectra;
    Dataset panel;
    std::vector<Label> labels;
    std::vector<std::string> sample_ids;
    std::vector<std::string> qc_excluded;

    [[nodiscard]] std::size_t n() const { return labels.size(); }

    /// Matches samples by id in spectra order. Throws SampleMismatch.
    static ExperimentData assemble(const std::vector<Spectrum>& raw_spectra, const Dataset& panel,
                                   const std::vector<std::pair<std::string, Label>>& labels,
                                   const PipelineConfig& cfg, bool apply_qc);
};

/// Per-training-set spectral features, computed once and shared by pipelines.
class SpectralFeaturizer {
public:
    SpectralFeaturizer(const ExperimentData& data, PipelineConfig cfg, std::size_t neighborhood);
    std::shared_ptr<const SplitFeatures> features(std::span<const std::size_t> train) const;

private:
    const ExperimentData& data_;
    PipelineConfig cfg_;
    std::size_t neighborhood_;
    mutable std::mutex mutex_;
    mutable std::map<std::vector<std::size_t>, std::shared_ptr<const SplitFeatures>> cache_;
};

std::unique_ptr<Pipeline> make_pipeline(const PipelineSpec& spec, const ExperimentData& data,
                                        std::shared_ptr<const SpectralFeaturizer> featurizer);

struct ComparisonResult {
    Comparison comparison;
    TTestResult test;
};

struct ExperimentResult {
    SplitPlan plan;
    std::vector<EvalReport> reports; ///< config order
    std::vector<ComparisonResult> comparisons;

    [[nodiscard]] const EvalReport& report(const std::string& id) const;
};

/// Runs every pipeline on one shared split plan; jobs are (pipeline, repeat)
/// pairs distributed over the thread budget.
ExperimentResult run_experiments(const std::vector<PipelineSpec>& pipelines, const ExperimentData& data,
                                 const SplitParams& split, const std::vector<Comparison>& comparisons,
                                 const PipelineConfig& cfg, std::size_t neighborhood,
                                 unsigned threads = thread_budget());

struct PaperSuiteOptions {
    std::uint64_t seed = 7;
    int n_repeats = 40;
    int n_trees = 500;
    std::optional<SynthConfig> synth; ///< default: the tuned regime with synth.seed derived from seed
    unsigned threads = thread_budget();
};

/// Default synthetic regime used by the suite.
SynthConfig paper_suite_synth_config(std::uint64_t seed);
/// Same regime with every class signal removed.
SynthConfig null_synth_config(std::uint64_t seed);

/// Single-source grid (five models x panel / spectral / merged) and the fusion
/// rows; the composition row is run with in-sample and with 5-fold held-out
/// level-one scores.
std::vector<PipelineSpec> paper_suite_pipelines(int n_trees);
std::vector<Comparison> paper_suite_comparisons();

struct PaperSuiteResult {
    SynthConfig synth;
    ExperimentResult experiment;
    std::vector<std::string> qc_excluded;
};

PaperSuiteResult run_paper_suite(const PaperSuiteOptions& opts);

/// Reports, comparisons, tables, ROC CSVs and the manifest.
void write_paper_suite(const PaperSuiteResult& result, const PaperSuiteOptions& opts,
                       const std::filesystem::path& out_dir);

std::string fnv1a_hex(const std::string& bytes);

inline constexpr const char* kVersion = "1.0.0";

} // namespace biofuse
