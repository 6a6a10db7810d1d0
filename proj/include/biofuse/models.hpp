#pragma once

#include "biofuse/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace biofuse {

enum class ModelKind { Svm, RandomForest, Cart, NaiveBayes, Logistic };

const char* to_string(ModelKind kind) noexcept;
ModelKind model_kind_from_string(const std::string& s);

/// Hyperparameters for one base classifier. Fields irrelevant to `kind` are ignored.
struct ModelSpec {
    ModelKind kind = ModelKind::Svm;
    double C = 1.0;
    int n_trees = 500;
    std::optional<int> mtry; ///< unset: ceil(sqrt(p))
    std::uint64_t seed = 0;
    bool bootstrap = true;
    double l2 = 1.0;

    bool operator==(const ModelSpec&) const = default;
};

/// Per-column centering and scaling learned from training rows.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale; ///< sample SD, or 1 for constant columns

    static Standardizer fit(const Matrix& X);
    [[nodiscard]] std::vector<double> apply(std::span<const double> x) const;
    [[nodiscard]] Matrix apply(const Matrix& X) const;
};

/// Linear SVM in standardized coordinates, with the dual solution it came from.
struct LinearModel {
    std::vector<double> w;
    double w0 = 0.0;
    Standardizer standardizer;
    std::vector<double> alpha; ///< one multiplier per training sample
    double C = 1.0;
    bool converged = true;
    std::size_t iterations = 0;
    double kkt_gap = 0.0;

    [[nodiscard]] double decision(std::span<const double> x) const;
    /// Hyperplane (w, w0) expressed on unstandardized features.
    [[nodiscard]] std::pair<std::vector<double>, double> original_space() const;
};

struct TreeNode {
    int feature = -1; ///< -1 marks a leaf
    double threshold = 0.0; ///< x[feature] <= threshold goes left
    int left = -1;
    int right = -1;
    std::size_t n_case = 0;
    std::size_t n_control = 0;

    [[nodiscard]] bool is_leaf() const noexcept { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes; ///< nodes[0] is the root

    [[nodiscard]] const TreeNode& leaf_for(std::span<const double> x) const;
    /// Case fraction of the leaf reached by x.
    [[nodiscard]] double case_fraction(std::span<const double> x) const;
    /// Majority vote of the leaf; ties go to control.
    [[nodiscard]] bool votes_case(std::span<const double> x) const;
    [[nodiscard]] std::size_t depth() const;
};

struct Forest {
    std::vector<DecisionTree> trees;
    int mtry = 1;
    std::uint64_t seed = 0;
    bool bootstrap = true;

    /// Fraction of trees voting case.
    [[nodiscard]] double vote_ratio(std::span<const double> x) const;
};

struct CartModel {
    DecisionTree tree;
};

struct GaussianNB {
    std::vector<double> mean_case, var_case;
    std::vector<double> mean_control, var_control;
    double log_prior_case = 0.0;
    double log_prior_control = 0.0;
    double var_floor = 0.0;

    /// log P(case | x) - log P(control | x)
    [[nodiscard]] double log_odds(std::span<const double> x) const;
};

struct LogisticModel {
    std::vector<double> w;
    double b = 0.0;
    Standardizer standardizer;
    double l2 = 1.0;
    bool converged = true;
    std::size_t iterations = 0;
    double grad_norm = 0.0;

    [[nodiscard]] double linear_predictor(std::span<const double> x) const;
};

/// Any fitted base classifier. Immutable after training.
class TrainedModel {
public:
    using Variant = std::variant<LinearModel, Forest, CartModel, GaussianNB, LogisticModel>;

    TrainedModel(Variant impl, std::size_t dimension) : impl_(std::move(impl)), dim_(dimension) {}

    [[nodiscard]] ModelKind kind() const noexcept;
    [[nodiscard]] std::size_t dimension() const noexcept { return dim_; }
    /// Scores strictly above this are labelled case.
    [[nodiscard]] double threshold() const noexcept;
    /// False when an iterative trainer hit its iteration cap.
    [[nodiscard]] bool converged() const noexcept;

    [[nodiscard]] double score(std::span<const double> x) const;
    [[nodiscard]] Label label(std::span<const double> x) const;

    template <typename T>
    [[nodiscard]] const T& as() const { return std::get<T>(impl_); }
    [[nodiscard]] const Variant& impl() const noexcept { return impl_; }

    /// Versioned JSON document; doubles round-trip exactly.
    [[nodiscard]] std::string to_json() const;
    static TrainedModel from_json(const std::string& text);

private:
    Variant impl_;
    std::size_t dim_;
};

inline Label label_from_score(double score, double threshold) noexcept {
    return score > threshold ? Label::Case : Label::Control;
}

TrainedModel train_linear_svm(const Dataset& d, double C = 1.0);
/// Trees draw from independent per-tree streams, so the result does not
/// depend on `threads`.
TrainedModel train_random_forest(const Dataset& d, int n_trees = 500, std::optional<int> mtry = std::nullopt,
                                 std::uint64_t seed = 0, bool bootstrap = true, unsigned threads = 1);
TrainedModel train_cart(const Dataset& d);
TrainedModel train_gaussian_nb(const Dataset& d);
TrainedModel train_logistic(const Dataset& d, double l2 = 1.0);

/// Dispatches on spec.kind.
TrainedModel train_model(const Dataset& d, const ModelSpec& spec);

/// Throws DimensionMismatch when x does not match the training width.
double predict_score(const TrainedModel& m, std::span<const double> x);
Label predict_label(const TrainedModel& m, std::span<const double> x);

} // namespace biofuse
