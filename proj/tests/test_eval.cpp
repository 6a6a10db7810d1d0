#include "biofuse/error.hpp"
#include "biofuse/eval.hpp"
#include "biofuse/models.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <set>
#include <vector>

using namespace biofuse;

namespace {

std::vector<Label> balanced(std::size_t cases, std::size_t controls) {
    std::vector<Label> y(cases, Label::Case);
    y.insert(y.end(), controls, Label::Control);
    return y;
}

class ConstantPipeline : public Pipeline {
public:
    explicit ConstantPipeline(Label l) : label_(l) {}
    [[nodiscard]] std::string id() const override { return "constant"; }
    [[nodiscard]] std::unique_ptr<FittedPipeline> fit(std::span<const std::size_t>, std::uint64_t) const override {
        struct Fitted : FittedPipeline {
            Label l;
            [[nodiscard]] double score(std::size_t) const override { return 0.0; }
            [[nodiscard]] Label label(std::size_t) const override { return l; }
        };
        auto f = std::make_unique<Fitted>();
        f->l = label_;
        return f;
    }

private:
    Label label_;
};

// Scores every sample by a fixed value, labels by sign; deterministic in the seed.
class NoisyPipeline : public Pipeline {
public:
    explicit NoisyPipeline(std::vector<double> base) : base_(std::move(base)) {}
    [[nodiscard]] std::string id() const override { return "noisy"; }
    [[nodiscard]] std::unique_ptr<FittedPipeline> fit(std::span<const std::size_t>,
                                                      std::uint64_t seed) const override {
        struct Fitted : FittedPipeline {
            std::vector<double> s;
            [[nodiscard]] double score(std::size_t i) const override { return s[i]; }
            [[nodiscard]] Label label(std::size_t i) const override { return label_from_score(s[i], 0.0); }
        };
        auto f = std::make_unique<Fitted>();
        Rng rng(seed);
        for (double b : base_) f->s.push_back(b + 0.3 * testing::gauss(rng));
        return f;
    }

private:
    std::vector<double> base_;
};

} // namespace

TEST_CASE("split plans") {
    SplitParams p;
    p.seed = 9;
    p.stratified = false;
    const auto plan = make_splits(10, p);
    REQUIRE(plan.repeats.size() == 40);
    for (const auto& s : plan.repeats) {
        CHECK(s.train.size() == 7);
        CHECK(s.test.size() == 3);
        std::set<std::size_t> all(s.train.begin(), s.train.end());
        for (auto i : s.test) CHECK(all.insert(i).second);
        CHECK(all.size() == 10);
        CHECK(std::is_sorted(s.train.begin(), s.train.end()));
    }
    CHECK(make_splits(10, p).fingerprint() == plan.fingerprint());
    p.seed = 10;
    const auto other = make_splits(10, p);
    CHECK(other.fingerprint() != plan.fingerprint());
    CHECK(other.n_train() == 7);

    SplitParams strat;
    strat.seed = 3;
    const auto y = balanced(56, 53);
    const auto sp = make_splits(y, strat);
    CHECK(sp.n_train() == 76);
    for (const auto& s : sp.repeats) {
        const auto cases = static_cast<double>(std::count_if(s.train.begin(), s.train.end(),
                                                             [&](std::size_t i) { return is_case(y[i]); }));
        CHECK(std::abs(cases - 76.0 * 56.0 / 109.0) <= 1.0);
    }

    const auto y106 = balanced(53, 53);
    CHECK(make_splits(y106, strat).n_train() == 74);

    CHECK_THROWS_AS(make_splits(3, p), Error);
    CHECK_THROWS_AS(make_splits(balanced(1, 9), strat), Error);
    CHECK_THROWS_AS(make_splits(10, strat), Error);
}

TEST_CASE("confusion metrics") {
    const auto y = std::vector<Label>{Label::Case, Label::Case, Label::Control, Label::Control};
    const auto all = confusion_metrics(y, y);
    CHECK(all.error == 0.0);
    CHECK(all.sensitivity == 1.0);
    CHECK(all.specificity == 1.0);
    std::vector<Label> flipped;
    for (auto l : y) flipped.push_back(is_case(l) ? Label::Control : Label::Case);
    const auto bad = confusion_metrics(y, flipped);
    CHECK(bad.error == 1.0);
    CHECK(bad.sensitivity == 0.0);
    CHECK(bad.specificity == 0.0);

    // TP=3 FN=1 TN=4 FP=2
    std::vector<Label> t, p;
    auto add = [&](Label a, Label b, int k) {
        for (int i = 0; i < k; ++i) {
            t.push_back(a);
            p.push_back(b);
        }
    };
    add(Label::Case, Label::Case, 3);
    add(Label::Case, Label::Control, 1);
    add(Label::Control, Label::Control, 4);
    add(Label::Control, Label::Case, 2);
    const auto c = confusion_metrics(t, p);
    CHECK(c.error == doctest::Approx(0.3));
    CHECK(c.sensitivity == doctest::Approx(0.75));
    CHECK(c.specificity == doctest::Approx(2.0 / 3.0));
    const double P = 4, N = 6;
    CHECK(c.error == doctest::Approx(1.0 - (c.sensitivity * P + c.specificity * N) / (P + N)));

    const auto none = confusion_metrics(std::vector<Label>{Label::Control}, std::vector<Label>{Label::Control});
    CHECK(std::isnan(none.sensitivity));
    CHECK_THROWS_AS(confusion_metrics(y, std::vector<Label>{Label::Case}), Error);
}

TEST_CASE("AUC equals exhaustive pair counting") {
    Rng rng(51);
    for (int inst = 0; inst < 200; ++inst) {
        const std::size_t n = 2 + uniform_index(rng, 60);
        std::vector<double> s(n);
        std::vector<Label> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = std::round(testing::gauss(rng) * 4.0) / 4.0; // coarse grid to force ties
            y[i] = uniform01(rng) < 0.5 ? Label::Case : Label::Control;
        }
        y[0] = Label::Case;
        y[1] = Label::Control;
        const auto r = roc_auc(s, y);
        CHECK(r.auc == oracle::pair_count_auc(s, y));
        CHECK(r.points.front().fpr == 0.0);
        CHECK(r.points.front().tpr == 0.0);
        CHECK(r.points.back().fpr == 1.0);
        CHECK(r.points.back().tpr == 1.0);
    }
}

TEST_CASE("AUC edge cases and monotone invariance") {
    const std::vector<Label> y{Label::Case, Label::Case, Label::Control, Label::Control};
    CHECK(roc_auc(std::vector<double>{4, 3, 2, 1}, y).auc == 1.0);
    CHECK(roc_auc(std::vector<double>{1, 1, 1, 1}, y).auc == 0.5);
    CHECK_THROWS_AS(roc_auc(std::vector<double>{1, 2}, std::vector<Label>{Label::Case, Label::Case}), Error);

    Rng rng(52);
    for (int inst = 0; inst < 100; ++inst) {
        std::vector<double> s = testing::random_vector(rng, 30);
        std::vector<Label> lab(30);
        for (std::size_t i = 0; i < 30; ++i) lab[i] = i % 3 == 0 ? Label::Case : Label::Control;
        std::vector<double> t1, t2;
        for (double v : s) {
            t1.push_back(std::exp(2.0 * v) + 5.0);
            t2.push_back(std::atan(v) * 3.0 - 1.0);
        }
        const double a = roc_auc(s, lab).auc;
        CHECK(roc_auc(t1, lab).auc == a);
        CHECK(roc_auc(t2, lab).auc == a);
    }
}

TEST_CASE("summaries use the sample SD and skip NaN") {
    const std::vector<double> v{1.0, 2.0, 4.0, std::nan("")};
    const auto s = summarize(v);
    CHECK(s.count == 3);
    CHECK(s.mean == doctest::Approx(7.0 / 3.0));
    CHECK(s.sd == doctest::Approx(std::sqrt(((1 - 7.0 / 3) * (1 - 7.0 / 3) + (2 - 7.0 / 3) * (2 - 7.0 / 3) +
                                             (4 - 7.0 / 3) * (4 - 7.0 / 3)) / 2.0)));
    CHECK(summarize(std::vector<double>{0.25}).sd == 0.0);
}

TEST_CASE("a constant control classifier") {
    const auto y = balanced(20, 30);
    SplitParams p;
    p.seed = 4;
    p.n_repeats = 10;
    const auto plan = make_splits(y, p);
    const auto r = run_experiment(ConstantPipeline(Label::Control), y, plan, 2);
    for (std::size_t k = 0; k < r.repeats.size(); ++k) {
        const auto& t = plan.repeats[k].test;
        const double cases = static_cast<double>(std::count_if(t.begin(), t.end(), [&](std::size_t i) {
            return is_case(y[i]);
        }));
        CHECK(r.repeats[k].error == doctest::Approx(cases / static_cast<double>(t.size())));
        CHECK(r.repeats[k].sensitivity == 0.0);
        CHECK(r.repeats[k].specificity == 1.0);
        CHECK(r.repeats[k].auc == 0.5);
    }
}

TEST_CASE("reports aggregate and reproduce") {
    const auto y = balanced(25, 25);
    std::vector<double> base;
    for (std::size_t i = 0; i < y.size(); ++i) base.push_back(is_case(y[i]) ? 0.4 : -0.4);
    SplitParams p;
    p.seed = 8;
    p.n_repeats = 1;
    const auto one = run_experiment(NoisyPipeline(base), y, make_splits(y, p));
    CHECK(one.error.mean == one.repeats[0].error);
    CHECK(one.auc.mean == one.repeats[0].auc);
    CHECK(one.auc.sd == 0.0);

    p.n_repeats = 12;
    const auto plan = make_splits(y, p);
    const auto a = run_experiment(NoisyPipeline(base), y, plan, 1);
    const auto b = run_experiment(NoisyPipeline(base), y, plan, 3);
    CHECK(a.to_json() == b.to_json());
    CHECK(EvalReport::from_json(a.to_json()).to_json() == a.to_json());
    CHECK(a.plan_fingerprint == plan.fingerprint());
    auto copy = a;
    copy.aggregate();
    CHECK(copy.to_json() == a.to_json());
}

TEST_CASE("single-class test sets are flagged") {
    const auto y = balanced(4, 4);
    SplitPlan plan;
    plan.n = 8;
    plan.params.n_repeats = 1;
    plan.repeats.push_back({{2, 3, 4, 5, 6, 7}, {0, 1}});
    const auto r = evaluate_repeat(ConstantPipeline(Label::Case), y, plan, 0);
    CHECK(r.single_class);
    CHECK(std::isnan(r.auc));
    CHECK(r.roc.empty());

    SplitPlan overlap = plan;
    overlap.repeats[0] = {{0, 2, 3, 4, 5, 6, 7}, {0, 1}};
    CHECK_THROWS_AS(evaluate_repeat(ConstantPipeline(Label::Case), y, overlap, 0), Error);
}

TEST_CASE("corrected resampled t-test") {
    const std::vector<double> d{0.1 - 1e-3, 0.1 + 2e-3, 0.1 - 5e-4, 0.1, 0.1 - 1.5e-3};
    const double k = 5.0;
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / k;
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double var = ss / (k - 1.0);
    const double t = mean / std::sqrt((1.0 / k + 3.0 / 7.0) * var);
    const auto r = corrected_t_test(d, 7, 3);
    CHECK(std::abs(r.t - t) <= 1e-9 * std::abs(t));
    CHECK(std::abs(r.t_uncorrected - mean / std::sqrt(var / k)) <= 1e-9 * std::abs(r.t_uncorrected));
    CHECK(std::abs(r.t) <= std::abs(r.t_uncorrected));
    CHECK(r.k == 5);

    Rng rng(53);
    for (int inst = 0; inst < 20; ++inst) {
        const auto diffs = testing::random_vector(rng, 10 + uniform_index(rng, 30), 0.05);
        const auto res = corrected_t_test(diffs, 74, 32);
        CHECK(res.p == doctest::Approx(oracle::student_two_sided(res.t, static_cast<double>(res.k) - 1.0)).epsilon(1e-6));
        CHECK(res.significant == (res.p < 0.05));
    }

    const std::vector<double> zeros(6, 0.0);
    const auto z = corrected_t_test(zeros, 7, 3);
    CHECK(z.t == 0.0);
    CHECK(z.p == 1.0);
    const std::vector<double> same(6, 0.02);
    const auto s = corrected_t_test(same, 7, 3);
    CHECK(s.degenerate);
    CHECK(s.p == 0.0);
    CHECK_THROWS_AS(corrected_t_test(std::vector<double>{0.1}, 7, 3), Error);
}

TEST_CASE("t-test on reports enforces one shared plan") {
    const auto y = balanced(25, 25);
    std::vector<double> base;
    for (std::size_t i = 0; i < y.size(); ++i) base.push_back(is_case(y[i]) ? 0.4 : -0.4);
    SplitParams p;
    p.seed = 2;
    p.n_repeats = 10;
    const auto plan = make_splits(y, p);
    const auto a = run_experiment(NoisyPipeline(base), y, plan);
    const auto same = corrected_t_test(a, a, Metric::Auc, plan.n_train(), plan.n_test());
    CHECK(same.t == 0.0);
    CHECK(same.p == 1.0);

    p.seed = 3;
    const auto b = run_experiment(NoisyPipeline(base), y, make_splits(y, p));
    CHECK_THROWS_AS(corrected_t_test(a, b, Metric::Auc, plan.n_train(), plan.n_test()), Error);
    CHECK(metric_from_string(to_string(Metric::Specificity)) == Metric::Specificity);
}
