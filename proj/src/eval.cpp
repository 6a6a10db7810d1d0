#include "biofuse/eval.hpp"

#include "biofuse/error.hpp"
#include "biofuse/random.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numeric>

namespace biofuse {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Fnv1a {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= c[i];
            h *= 0x100000001b3ULL;
        }
    }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
};

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

std::size_t train_size(std::size_t n, double fraction) {
    return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

} // namespace

std::string SplitPlan::fingerprint() const {
    Fnv1a f;
    f.u64(n);
    std::uint64_t frac_bits;
    std::memcpy(&frac_bits, &params.train_fraction, sizeof frac_bits);
    f.u64(frac_bits);
    f.u64(static_cast<std::uint64_t>(params.n_repeats));
    f.u64(params.seed);
    f.u64(params.stratified ? 1 : 0);
    for (const auto& s : repeats) {
        f.u64(s.train.size());
        for (auto i : s.train) f.u64(i);
        f.u64(s.test.size());
        for (auto i : s.test) f.u64(i);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(f.h));
    return buf;
}

SplitPlan make_splits(std::span<const Label> labels, const SplitParams& params) {
    const std::size_t n = labels.size();
    if (n < 4) fail(ErrorCode::TooFewSamples, "random sub-sampling needs at least 4 samples");
    if (params.n_repeats < 1) fail(ErrorCode::ConfigInvalid, "n_repeats must be positive");
    if (!(params.train_fraction > 0.0 && params.train_fraction < 1.0))
        fail(ErrorCode::ConfigInvalid, "train_fraction must lie in (0, 1)");
    const std::size_t n_train = train_size(n, params.train_fraction);
    if (n_train < 1 || n_train >= n) fail(ErrorCode::TooFewSamples, "split leaves an empty train or test set");

    std::vector<std::size_t> cases, controls;
    for (std::size_t i = 0; i < n; ++i) (is_case(labels[i]) ? cases : controls).push_back(i);

    // Per-class training quota by largest remainder, summing to n_train.
    std::size_t quota_case = 0, quota_control = 0;
    if (params.stratified) {
        if (cases.size() < 2 || controls.size() < 2)
            fail(ErrorCode::TooFewSamples, "stratified splitting needs at least two samples per class");
        const double ec = params.train_fraction * static_cast<double>(cases.size());
        const double en = params.train_fraction * static_cast<double>(controls.size());
        quota_case = static_cast<std::size_t>(std::floor(ec));
        quota_control = static_cast<std::size_t>(std::floor(en));
        const bool case_first = (ec - std::floor(ec)) >= (en - std::floor(en));
        std::size_t deficit = n_train - (quota_case + quota_control);
        if (deficit > 0) {
            ++(case_first ? quota_case : quota_control);
            --deficit;
        }
        if (deficit > 0) ++(case_first ? quota_control : quota_case);
        if (quota_case >= cases.size() || quota_control >= controls.size() || quota_case == 0 ||
            quota_control == 0)
            fail(ErrorCode::TooFewSamples, "stratified split leaves a class absent from train or test");
    }

    SplitPlan plan;
    plan.n = n;
    plan.params = params;
    plan.repeats.resize(static_cast<std::size_t>(params.n_repeats));
    for (std::size_t r = 0; r < plan.repeats.size(); ++r) {
        Rng rng(derive_seed(params.seed, r));
        Split& s = plan.repeats[r];
        if (params.stratified) {
            auto c = cases;
            auto k = controls;
            shuffle(c, rng);
            shuffle(k, rng);
            s.train.assign(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(quota_case));
            s.train.insert(s.train.end(), k.begin(), k.begin() + static_cast<std::ptrdiff_t>(quota_control));
            s.test.assign(c.begin() + static_cast<std::ptrdiff_t>(quota_case), c.end());
            s.test.insert(s.test.end(), k.begin() + static_cast<std::ptrdiff_t>(quota_control), k.end());
        } else {
            std::vector<std::size_t> all(n);
            std::iota(all.begin(), all.end(), std::size_t{0});
            shuffle(all, rng);
            s.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
            s.test.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
        }
        std::sort(s.train.begin(), s.train.end());
        std::sort(s.test.begin(), s.test.end());
    }
    return plan;
}

SplitPlan make_splits(std::size_t n, const SplitParams& params) {
    if (params.stratified) fail(ErrorCode::ConfigInvalid, "stratified splitting needs labels");
    std::vector<Label> dummy(n, Label::Control);
    return make_splits(dummy, params);
}

Confusion confusion_metrics(std::span<const Label> truth, std::span<const Label> predicted) {
    if (truth.size() != predicted.size())
        fail(ErrorCode::LengthMismatch, "label and prediction lists differ in length");
    if (truth.empty()) fail(ErrorCode::LengthMismatch, "confusion metrics need at least one sample");
    Confusion c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool t = is_case(truth[i]);
        const bool p = is_case(predicted[i]);
        if (t && p) ++c.tp;
        else if (t) ++c.fn;
        else if (p) ++c.fp;
        else ++c.tn;
    }
    c.error = static_cast<double>(c.fn + c.fp) / static_cast<double>(truth.size());
    c.sensitivity = (c.tp + c.fn) ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : kNaN;
    c.specificity = (c.tn + c.fp) ? static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp) : kNaN;
    return c;
}

RocCurve roc_auc(std::span<const double> scores, std::span<const Label> labels) {
    if (scores.size() != labels.size()) fail(ErrorCode::LengthMismatch, "scores and labels differ in length");
    const std::size_t n = scores.size();
    std::size_t P = 0;
    for (Label l : labels) P += is_case(l);
    const std::size_t N = n - P;
    if (P == 0 || N == 0) fail(ErrorCode::SingleClass, "ROC needs both classes");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Mann-Whitney U from mid-ranks.
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k)
            if (is_case(labels[order[k]])) rank_sum += mid;
        i = j + 1;
    }
    const double dp = static_cast<double>(P);
    const double u = rank_sum - dp * (dp + 1.0) / 2.0;

    RocCurve roc;
    roc.auc = u / (dp * static_cast<double>(N));
    roc.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = n; i > 0;) {
        const double thr = scores[order[i - 1]];
        while (i > 0 && scores[order[i - 1]] == thr) {
            (is_case(labels[order[i - 1]]) ? tp : fp)++;
            --i;
        }
        roc.points.push_back({static_cast<double>(fp) / static_cast<double>(N),
                              static_cast<double>(tp) / dp, thr});
    }
    return roc;
}

const char* to_string(Metric m) noexcept {
    switch (m) {
    case Metric::Error: return "error";
    case Metric::Sensitivity: return "sensitivity";
    case Metric::Specificity: return "specificity";
    case Metric::Auc: return "auc";
    }
    return "?";
}

Metric metric_from_string(const std::string& s) {
    if (s == "error") return Metric::Error;
    if (s == "sensitivity" || s == "sn") return Metric::Sensitivity;
    if (s == "specificity" || s == "sp") return Metric::Specificity;
    if (s == "auc") return Metric::Auc;
    fail(ErrorCode::ConfigInvalid, "unknown metric '" + s + "'");
}

double RepeatResult::value(Metric m) const {
    switch (m) {
    case Metric::Error: return error;
    case Metric::Sensitivity: return sensitivity;
    case Metric::Specificity: return specificity;
    case Metric::Auc: return auc;
    }
    return kNaN;
}

MetricSummary summarize(std::span<const double> values) {
    MetricSummary s;
    double sum = 0.0;
    for (double v : values)
        if (std::isfinite(v)) {
            sum += v;
            ++s.count;
        }
    if (s.count == 0) {
        s.mean = kNaN;
        s.sd = kNaN;
        return s;
    }
    s.mean = sum / static_cast<double>(s.count);
    if (s.count < 2) return s;
    double ss = 0.0;
    for (double v : values)
        if (std::isfinite(v)) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.count - 1));
    return s;
}

const MetricSummary& EvalReport::summary(Metric m) const {
    switch (m) {
    case Metric::Error: return error;
    case Metric::Sensitivity: return sensitivity;
    case Metric::Specificity: return specificity;
    case Metric::Auc: return auc;
    }
    return error;
}

std::vector<double> EvalReport::values(Metric m) const {
    std::vector<double> v;
    v.reserve(repeats.size());
    for (const auto& r : repeats) v.push_back(r.value(m));
    return v;
}

void EvalReport::aggregate() {
    error = summarize(values(Metric::Error));
    sensitivity = summarize(values(Metric::Sensitivity));
    specificity = summarize(values(Metric::Specificity));
    auc = summarize(values(Metric::Auc));
}

namespace {

// JSON has no NaN/inf; encode them as null / strings.
json num(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double num_from(const json& j) {
    if (j.is_null()) return kNaN;
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        fail(ErrorCode::Parse, "bad numeric value '" + s + "'");
    }
    return j.get<double>();
}

json summary_json(const MetricSummary& s) {
    return {{"mean", num(s.mean)}, {"sd", num(s.sd)}, {"count", s.count}};
}

} // namespace

std::string EvalReport::to_json() const {
    json j;
    j["format"] = "biofuse.report";
    j["version"] = 1;
    j["pipeline_id"] = pipeline_id;
    j["plan_fingerprint"] = plan_fingerprint;
    j["n"] = n;
    j["n_train"] = n_train;
    j["n_test"] = n_test;
    json reps = json::array();
    for (const auto& r : repeats) {
        json roc = json::array();
        for (const auto& p : r.roc) roc.push_back({p.fpr, p.tpr, num(p.threshold)});
        reps.push_back({{"error", num(r.error)},
                        {"sensitivity", num(r.sensitivity)},
                        {"specificity", num(r.specificity)},
                        {"auc", num(r.auc)},
                        {"tp", r.tp},
                        {"fn", r.fn},
                        {"tn", r.tn},
                        {"fp", r.fp},
                        {"single_class", r.single_class},
                        {"converged", r.converged},
                        {"roc", std::move(roc)}});
    }
    j["repeats"] = std::move(reps);
    j["summary"] = {{"error", summary_json(error)},
                    {"sensitivity", summary_json(sensitivity)},
                    {"specificity", summary_json(specificity)},
                    {"auc", summary_json(auc)}};
    return j.dump(1);
}

EvalReport EvalReport::from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        if (j.value("format", "") != "biofuse.report") fail(ErrorCode::Parse, "not a report document");
        EvalReport r;
        r.pipeline_id = j.at("pipeline_id").get<std::string>();
        r.plan_fingerprint = j.at("plan_fingerprint").get<std::string>();
        r.n = j.at("n").get<std::size_t>();
        r.n_train = j.at("n_train").get<std::size_t>();
        r.n_test = j.at("n_test").get<std::size_t>();
        for (const auto& e : j.at("repeats")) {
            RepeatResult rr;
            rr.error = num_from(e.at("error"));
            rr.sensitivity = num_from(e.at("sensitivity"));
            rr.specificity = num_from(e.at("specificity"));
            rr.auc = num_from(e.at("auc"));
            rr.tp = e.at("tp").get<std::size_t>();
            rr.fn = e.at("fn").get<std::size_t>();
            rr.tn = e.at("tn").get<std::size_t>();
            rr.fp = e.at("fp").get<std::size_t>();
            rr.single_class = e.at("single_class").get<bool>();
            rr.converged = e.value("converged", true);
            for (const auto& p : e.at("roc"))
                rr.roc.push_back({p.at(0).get<double>(), p.at(1).get<double>(), num_from(p.at(2))});
            r.repeats.push_back(std::move(rr));
        }
        r.aggregate();
        return r;
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, std::string("report document: ") + e.what());
    }
}

std::uint64_t repeat_seed(const SplitPlan& plan, std::size_t repeat) {
    return derive_seed(plan.params.seed ^ 0x5eed5eed5eed5eedULL, repeat);
}

RepeatResult evaluate_repeat(const Pipeline& pipeline, std::span<const Label> labels, const SplitPlan& plan,
                             std::size_t repeat) {
    const Split& split = plan.repeats.at(repeat);
    std::vector<bool> seen(plan.n, false);
    for (auto i : split.train) {
        if (i >= plan.n || seen[i]) fail(ErrorCode::InvalidInput, "malformed split: bad training index");
        seen[i] = true;
    }
    for (auto i : split.test) {
        if (i >= plan.n || seen[i]) fail(ErrorCode::InvalidInput, "malformed split: train and test overlap");
        seen[i] = true;
    }
    if (split.train.size() + split.test.size() != plan.n)
        fail(ErrorCode::InvalidInput, "malformed split: train and test do not cover all samples");

    const auto fitted = pipeline.fit(split.train, repeat_seed(plan, repeat));
    std::vector<double> scores;
    std::vector<Label> truth, predicted;
    for (auto i : split.test) {
        scores.push_back(fitted->score(i));
        predicted.push_back(fitted->label(i));
        truth.push_back(labels[i]);
    }
    const auto c = confusion_metrics(truth, predicted);
    RepeatResult r;
    r.converged = fitted->converged();
    r.error = c.error;
    r.sensitivity = c.sensitivity;
    r.specificity = c.specificity;
    r.tp = c.tp;
    r.fn = c.fn;
    r.tn = c.tn;
    r.fp = c.fp;
    if ((c.tp + c.fn) == 0 || (c.tn + c.fp) == 0) {
        r.single_class = true;
        r.auc = kNaN;
    } else {
        auto roc = roc_auc(scores, truth);
        r.auc = roc.auc;
        r.roc = std::move(roc.points);
    }
    return r;
}

EvalReport make_report(std::string pipeline_id, const SplitPlan& plan, std::vector<RepeatResult> repeats) {
    EvalReport rep;
    rep.pipeline_id = std::move(pipeline_id);
    rep.plan_fingerprint = plan.fingerprint();
    rep.n = plan.n;
    rep.n_train = plan.n_train();
    rep.n_test = plan.n_test();
    rep.repeats = std::move(repeats);
    rep.aggregate();
    return rep;
}

EvalReport run_experiment(const Pipeline& pipeline, std::span<const Label> labels, const SplitPlan& plan,
                          unsigned threads) {
    if (labels.size() != plan.n) fail(ErrorCode::SampleMismatch, "label count does not match the split plan");
    std::vector<RepeatResult> results(plan.repeats.size());
    parallel_for(
        results.size(), [&](std::size_t r) { results[r] = evaluate_repeat(pipeline, labels, plan, r); }, threads);
    return make_report(pipeline.id(), plan, std::move(results));
}

TTestResult corrected_t_test(std::span<const double> d, std::size_t n_train, std::size_t n_test) {
    std::vector<double> diffs;
    for (double v : d)
        if (std::isfinite(v)) diffs.push_back(v);
    const std::size_t k = diffs.size();
    if (k < 2) fail(ErrorCode::TooFewRepeats, "corrected t-test needs at least two paired repeats");
    if (n_train == 0) fail(ErrorCode::InvalidInput, "n_train must be positive");

    TTestResult r;
    r.k = k;
    const double kd = static_cast<double>(k);
    const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / kd;
    double ss = 0.0;
    for (double v : diffs) ss += (v - mean) * (v - mean);
    const double var = ss / (kd - 1.0);
    r.mean_difference = mean;

    const double correction = 1.0 / kd + static_cast<double>(n_test) / static_cast<double>(n_train);
    if (var == 0.0) {
        if (mean == 0.0) {
            r.t = 0.0;
            r.t_uncorrected = 0.0;
            r.p = 1.0;
        } else {
            r.t = std::copysign(std::numeric_limits<double>::infinity(), mean);
            r.t_uncorrected = r.t;
            r.p = 0.0;
            r.degenerate = true;
            r.significant = true;
        }
        return r;
    }
    r.t = mean / std::sqrt(correction * var);
    r.t_uncorrected = mean / std::sqrt(var / kd);
    const boost::math::students_t dist(kd - 1.0);
    r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
    r.p = std::min(1.0, r.p);
    r.significant = r.p < 0.05;
    return r;
}

TTestResult corrected_t_test(const EvalReport& a, const EvalReport& b, Metric metric, std::size_t n_train,
                             std::size_t n_test) {
    if (a.plan_fingerprint != b.plan_fingerprint || a.repeats.size() != b.repeats.size())
        fail(ErrorCode::PlanMismatch, "reports were produced on different split plans");
    if (a.repeats.size() < 2) fail(ErrorCode::TooFewRepeats, "corrected t-test needs at least two repeats");
    std::vector<double> d(a.repeats.size());
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = a.repeats[j].value(metric) - b.repeats[j].value(metric);
    return corrected_t_test(d, n_train, n_test);
}

} // namespace biofuse
