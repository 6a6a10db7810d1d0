#pragma once

#include "biofuse/dataset.hpp"
#include "biofuse/parallel.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace biofuse {

struct SplitParams {
    double train_fraction = 0.7;
    int n_repeats = 40;
    std::uint64_t seed = 0;
    bool stratified = true;
};

struct Split {
    std::vector<std::size_t> train; ///< ascending
    std::vector<std::size_t> test;  ///< ascending
};

/// Random sub-sampling plan: n_repeats independent train/test partitions.
struct SplitPlan {
    std::size_t n = 0;
    SplitParams params;
    std::vector<Split> repeats;

    [[nodiscard]] std::size_t n_train() const { return repeats.empty() ? 0 : repeats.front().train.size(); }
    [[nodiscard]] std::size_t n_test() const { return repeats.empty() ? 0 : repeats.front().test.size(); }
    /// Hash of the parameters and every index list.
    [[nodiscard]] std::string fingerprint() const;
};

/// Stratified (or plain) plan. Throws TooFewSamples.
SplitPlan make_splits(std::span<const Label> labels, const SplitParams& params);
/// Unstratified plan over n samples; throws ConfigInvalid if params.stratified.
SplitPlan make_splits(std::size_t n, const SplitParams& params);

/// Sensitivity and specificity are NaN when the test set lacks positives / negatives.
struct Confusion {
    double error = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
};

Confusion confusion_metrics(std::span<const Label> truth, std::span<const Label> predicted);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0; ///< score >= threshold is called case; +inf for the origin
};

struct RocCurve {
    std::vector<RocPoint> points; ///< from (0,0) to (1,1)
    double auc = 0.0;
};

/// ROC by descending unique thresholds; AUC is the Mann-Whitney statistic with
/// ties counted one half. Throws SingleClass.
RocCurve roc_auc(std::span<const double> scores, std::span<const Label> labels);

enum class Metric { Error, Sensitivity, Specificity, Auc };

const char* to_string(Metric m) noexcept;
Metric metric_from_string(const std::string& s);

struct RepeatResult {
    double error = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double auc = 0.0;
    std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
    std::vector<RocPoint> roc;
    /// Test set held a single class: AUC is NaN and the ROC is empty.
    bool single_class = false;
    bool converged = true;

    [[nodiscard]] double value(Metric m) const;
};

struct MetricSummary {
    double mean = 0.0;
    double sd = 0.0;       ///< sample (n-1) SD; 0 for a single value
    std::size_t count = 0; ///< finite values aggregated
};

MetricSummary summarize(std::span<const double> values);

struct EvalReport {
    std::string pipeline_id;
    std::string plan_fingerprint;
    std::size_t n = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::vector<RepeatResult> repeats;
    MetricSummary error, sensitivity, specificity, auc;

    [[nodiscard]] const MetricSummary& summary(Metric m) const;
    [[nodiscard]] std::vector<double> values(Metric m) const;
    /// Recomputes the summaries from the per-repeat values.
    void aggregate();

    [[nodiscard]] std::string to_json() const;
    static EvalReport from_json(const std::string& text);
};

/// Classifier fitted on one training split; queried by sample index.
class FittedPipeline {
public:
    virtual ~FittedPipeline() = default;
    [[nodiscard]] virtual double score(std::size_t sample) const = 0;
    [[nodiscard]] virtual Label label(std::size_t sample) const = 0;
    /// False when an iterative trainer stopped at its iteration cap.
    [[nodiscard]] virtual bool converged() const { return true; }
};

/// Trainable end-to-end pipeline over a fixed sample set. fit() must only use
/// information from the listed training samples.
class Pipeline {
public:
    virtual ~Pipeline() = default;
    [[nodiscard]] virtual std::string id() const = 0;
    [[nodiscard]] virtual std::unique_ptr<FittedPipeline> fit(std::span<const std::size_t> train,
                                                              std::uint64_t seed) const = 0;
};

/// Per-repeat seed handed to Pipeline::fit.
std::uint64_t repeat_seed(const SplitPlan& plan, std::size_t repeat);

/// Scores one repeat of the plan.
RepeatResult evaluate_repeat(const Pipeline& pipeline, std::span<const Label> labels, const SplitPlan& plan,
                             std::size_t repeat);

/// Fits on each training split, scores the test split, aggregates.
EvalReport run_experiment(const Pipeline& pipeline, std::span<const Label> labels, const SplitPlan& plan,
                          unsigned threads = thread_budget());

/// Assembles a report from already computed repeats (in plan order).
EvalReport make_report(std::string pipeline_id, const SplitPlan& plan, std::vector<RepeatResult> repeats);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    bool significant = false; ///< p < 0.05
    /// Differences had zero variance but non-zero mean; p is a 0 sentinel.
    bool degenerate = false;
    std::size_t k = 0;
    double mean_difference = 0.0;
    double t_uncorrected = 0.0;
};

/// Resampled paired t-test with the (1/k + n_test/n_train) variance
/// correction, two-sided, k - 1 degrees of freedom. Repeats where either
/// metric is NaN are dropped. Throws PlanMismatch / TooFewRepeats.
TTestResult corrected_t_test(const EvalReport& a, const EvalReport& b, Metric metric, std::size_t n_train,
                             std::size_t n_test);

/// Same test on raw paired differences.
TTestResult corrected_t_test(std::span<const double> differences, std::size_t n_train, std::size_t n_test);

} // namespace biofuse
