#include "biofuse/fusion.hpp"

#include "biofuse/error.hpp"
#include "biofuse/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace biofuse {

const char* to_string(FusionStrategy s) noexcept {
    switch (s) {
    case FusionStrategy::DataMerge: return "merge";
    case FusionStrategy::ModelInclusion: return "inclusion";
    case FusionStrategy::ModelComposition: return "composition";
    }
    return "?";
}

void FusionSpec::validate() const {
    switch (strategy) {
    case FusionStrategy::DataMerge:
        if (base.size() != 1 || second)
            fail(ErrorCode::ConfigInvalid, "data merge takes exactly one model");
        break;
    case FusionStrategy::ModelInclusion:
        if (base.size() != 1 || !second)
            fail(ErrorCode::ConfigInvalid, "model inclusion takes one base model and one target model");
        break;
    case FusionStrategy::ModelComposition:
        if (base.size() != 2 || !second)
            fail(ErrorCode::ConfigInvalid, "model composition takes two base models and one second-level model");
        break;
    }
    if (score_mode.kind == ScoreMode::Kind::OutOfFold && score_mode.folds < 2)
        fail(ErrorCode::ConfigInvalid, "out-of-fold scoring needs at least two folds");
}

namespace {

void require_matched(const Dataset& a, const Dataset& b) {
    if (a.n_samples() != b.n_samples())
        fail(ErrorCode::SampleMismatch, "sources have different sample counts");
    if (!a.sample_ids.empty() && !b.sample_ids.empty() && a.sample_ids != b.sample_ids)
        fail(ErrorCode::SampleMismatch, "sources list different samples or a different sample order");
    if (!a.y.empty() && !b.y.empty() && a.y != b.y)
        fail(ErrorCode::SampleMismatch, "sources disagree on labels");
}

const std::vector<Label>& labels_of(const Dataset& a, const Dataset& b) {
    return a.y.empty() ? b.y : a.y;
}

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out(a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

void require_width(std::span<const double> x, std::size_t p, const char* which) {
    if (x.size() != p)
        fail(ErrorCode::DimensionMismatch, std::string("source ") + which + " has the wrong number of features");
}

} // namespace

Dataset data_merge(const Dataset& a, const Dataset& b) {
    if (b.n_features() == 0 && (b.n_samples() == 0 || b.n_samples() == a.n_samples())) return a;
    if (a.n_features() == 0 && (a.n_samples() == 0 || a.n_samples() == b.n_samples())) return b;
    require_matched(a, b);
    Dataset out;
    out.X = Matrix(a.n_samples(), a.n_features() + b.n_features());
    for (std::size_t r = 0; r < a.n_samples(); ++r) {
        auto ra = a.X.row(r);
        auto rb = b.X.row(r);
        auto dst = out.X.row(r);
        std::copy(ra.begin(), ra.end(), dst.begin());
        std::copy(rb.begin(), rb.end(), dst.begin() + static_cast<std::ptrdiff_t>(ra.size()));
    }
    out.y = labels_of(a, b);
    out.sample_ids = a.sample_ids.empty() ? b.sample_ids : a.sample_ids;
    out.column_tags = a.column_tags;
    out.column_tags.insert(out.column_tags.end(), b.column_tags.begin(), b.column_tags.end());
    out.column_names = a.column_names;
    out.column_names.insert(out.column_names.end(), b.column_names.begin(), b.column_names.end());
    return out;
}

std::vector<double> level_one_scores(const Dataset& d, const ModelSpec& spec, const ScoreMode& mode,
                                     std::uint64_t fold_seed) {
    const std::size_t n = d.n_samples();
    std::vector<double> scores(n);
    if (mode.kind == ScoreMode::Kind::InSample) {
        const auto model = train_model(d, spec);
        for (std::size_t i = 0; i < n; ++i) scores[i] = model.score(d.X.row(i));
        return scores;
    }

    // Stratified fold assignment: shuffle each class, deal round-robin.
    const auto k = static_cast<std::size_t>(mode.folds);
    std::vector<std::size_t> fold(n);
    Rng rng(fold_seed);
    std::size_t dealt = 0;
    for (Label cls : {Label::Case, Label::Control}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i)
            if (d.y[i] == cls) members.push_back(i);
        for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[uniform_index(rng, i)]);
        for (std::size_t m : members) fold[m] = dealt++ % k;
    }
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::size_t> train, held;
        for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? held : train).push_back(i);
        if (held.empty()) continue;
        const auto model = train_model(d.rows(train), spec);
        for (std::size_t i : held) scores[i] = model.score(d.X.row(i));
    }
    return scores;
}

FusedModel train_merge(const FusionSpec& spec, const Dataset& a, const Dataset& b) {
    spec.validate();
    if (spec.strategy != FusionStrategy::DataMerge) fail(ErrorCode::ConfigInvalid, "spec is not a data merge");
    FusedModel fm;
    fm.strategy = FusionStrategy::DataMerge;
    fm.dim_a = a.n_features();
    fm.dim_b = b.n_features();
    fm.final_training = data_merge(a, b);
    fm.base.push_back(train_model(fm.final_training, spec.base[0]));
    return fm;
}

FusedModel train_inclusion(const FusionSpec& spec, const Dataset& a, const Dataset& b) {
    spec.validate();
    if (spec.strategy != FusionStrategy::ModelInclusion)
        fail(ErrorCode::ConfigInvalid, "spec is not a model inclusion");
    require_matched(a, b);
    const Dataset& source = spec.score_source == SourceId::A ? a : b;
    const Dataset& target = spec.score_source == SourceId::A ? b : a;

    FusedModel fm;
    fm.strategy = FusionStrategy::ModelInclusion;
    fm.score_source = spec.score_source;
    fm.dim_a = a.n_features();
    fm.dim_b = b.n_features();
    Dataset src = source;
    src.y = labels_of(a, b);
    const auto scores = level_one_scores(src, spec.base[0], spec.score_mode, spec.fold_seed);
    fm.base.push_back(train_model(src, spec.base[0]));

    fm.final_training = target;
    fm.final_training.y = src.y;
    fm.final_training.append_column(scores, SourceTag::Score,
                                    spec.score_source == SourceId::A ? "score_a" : "score_b");
    fm.second = train_model(fm.final_training, *spec.second);
    return fm;
}

FusedModel train_composition(const FusionSpec& spec, const Dataset& a, const Dataset& b) {
    spec.validate();
    if (spec.strategy != FusionStrategy::ModelComposition)
        fail(ErrorCode::ConfigInvalid, "spec is not a model composition");
    require_matched(a, b);
    const auto& y = labels_of(a, b);

    FusedModel fm;
    fm.strategy = FusionStrategy::ModelComposition;
    fm.dim_a = a.n_features();
    fm.dim_b = b.n_features();
    Dataset sa = a, sb = b;
    sa.y = y;
    sb.y = y;
    const auto scores_a = level_one_scores(sa, spec.base[0], spec.score_mode, spec.fold_seed);
    const auto scores_b = level_one_scores(sb, spec.base[1], spec.score_mode, derive_seed(spec.fold_seed, 1));
    fm.base.push_back(train_model(sa, spec.base[0]));
    fm.base.push_back(train_model(sb, spec.base[1]));

    Dataset level2;
    level2.X = Matrix(a.n_samples(), 0);
    level2.y = y;
    level2.sample_ids = a.sample_ids.empty() ? b.sample_ids : a.sample_ids;
    level2.append_column(scores_a, SourceTag::Score, "score_a");
    level2.append_column(scores_b, SourceTag::Score, "score_b");
    fm.final_training = std::move(level2);
    fm.second = train_model(fm.final_training, *spec.second);
    return fm;
}

FusedModel train_fusion(const FusionSpec& spec, const Dataset& a, const Dataset& b) {
    switch (spec.strategy) {
    case FusionStrategy::DataMerge: return train_merge(spec, a, b);
    case FusionStrategy::ModelInclusion: return train_inclusion(spec, a, b);
    case FusionStrategy::ModelComposition: return train_composition(spec, a, b);
    }
    fail(ErrorCode::ConfigInvalid, "unknown fusion strategy");
}

const TrainedModel& FusedModel::final_model() const {
    return second ? *second : base.front();
}

double FusedModel::predict_score(std::span<const double> xa, std::span<const double> xb) const {
    require_width(xa, dim_a, "A");
    require_width(xb, dim_b, "B");
    switch (strategy) {
    case FusionStrategy::DataMerge:
        return base[0].score(concat(xa, xb));
    case FusionStrategy::ModelInclusion: {
        const bool from_a = score_source == SourceId::A;
        const double s = base[0].score(from_a ? xa : xb);
        std::vector<double> aug(from_a ? xb.begin() : xa.begin(), from_a ? xb.end() : xa.end());
        aug.push_back(s);
        return second->score(aug);
    }
    case FusionStrategy::ModelComposition: {
        const double pair[2] = {base[0].score(xa), base[1].score(xb)};
        return second->score(pair);
    }
    }
    return 0.0;
}

Label FusedModel::predict_label(std::span<const double> xa, std::span<const double> xb) const {
    return label_from_score(predict_score(xa, xb), final_model().threshold());
}

std::vector<double> welch_t_statistics(const Dataset& d) {
    d.require_trainable();
    const double n1 = static_cast<double>(d.count(Label::Case));
    const double n0 = static_cast<double>(d.count(Label::Control));
    std::vector<double> t(d.n_features());
    for (std::size_t j = 0; j < d.n_features(); ++j) {
        double m1 = 0, m0 = 0;
        for (std::size_t i = 0; i < d.n_samples(); ++i) (is_case(d.y[i]) ? m1 : m0) += d.X(i, j);
        m1 /= n1;
        m0 /= n0;
        double s1 = 0, s0 = 0;
        for (std::size_t i = 0; i < d.n_samples(); ++i) {
            const double v = d.X(i, j);
            if (is_case(d.y[i])) s1 += (v - m1) * (v - m1);
            else s0 += (v - m0) * (v - m0);
        }
        const double v1 = n1 > 1 ? s1 / (n1 - 1) : 0.0;
        const double v0 = n0 > 1 ? s0 / (n0 - 1) : 0.0;
        const double se = std::sqrt(v1 / n1 + v0 / n0);
        const double diff = m1 - m0;
        if (se > 0) t[j] = diff / se;
        else t[j] = diff == 0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    }
    return t;
}

std::vector<std::size_t> t_test_rank(const Dataset& d, std::size_t k) {
    d.require_trainable();
    if (k > d.n_features())
        fail(ErrorCode::KTooLarge, "cannot select " + std::to_string(k) + " of " +
                                       std::to_string(d.n_features()) + " columns");
    const auto t = welch_t_statistics(d);
    std::vector<std::size_t> order(t.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(t[a]) > std::abs(t[b]); });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

Dataset t_test_select(const Dataset& d, std::size_t k) {
    return d.columns(t_test_rank(d, k));
}

} // namespace biofuse
