#include "biofuse/experiment.hpp"

#include "biofuse/error.hpp"
#include "biofuse/io.hpp"
#include "biofuse/random.hpp"
#include "biofuse/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>

namespace biofuse {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(SourceSelection s) noexcept {
    switch (s) {
    case SourceSelection::A: return "A";
    case SourceSelection::B: return "B";
    case SourceSelection::Merged: return "MERGED";
    }
    return "?";
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Config documents

namespace {

[[noreturn]] void bad_config(const std::string& m) {
    fail(ErrorCode::ConfigInvalid, m);
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) bad_config(where + " must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        (void)v;
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            bad_config(where + ": unknown key '" + key + "'");
    }
}

ModelSpec model_from(const json& j) {
    reject_unknown(j, {"kind", "C", "n_trees", "mtry", "seed", "bootstrap", "l2"}, "model spec");
    ModelSpec m;
    m.kind = model_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("C")) m.C = j["C"].get<double>();
    if (j.contains("n_trees")) m.n_trees = j["n_trees"].get<int>();
    if (j.contains("mtry") && !j["mtry"].is_null()) m.mtry = j["mtry"].get<int>();
    if (j.contains("seed")) m.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("bootstrap")) m.bootstrap = j["bootstrap"].get<bool>();
    if (j.contains("l2")) m.l2 = j["l2"].get<double>();
    if (!(m.C > 0.0)) bad_config("model spec: C must be positive");
    if (m.n_trees < 1) bad_config("model spec: n_trees must be positive");
    if (m.mtry && *m.mtry < 1) bad_config("model spec: mtry must be positive");
    if (!(m.l2 >= 0.0)) bad_config("model spec: l2 must be non-negative");
    return m;
}

json model_json(const ModelSpec& m) {
    json j = {{"kind", to_string(m.kind)}};
    switch (m.kind) {
    case ModelKind::Svm: j["C"] = m.C; break;
    case ModelKind::RandomForest:
        j["n_trees"] = m.n_trees;
        j["mtry"] = m.mtry ? json(*m.mtry) : json(nullptr);
        j["seed"] = m.seed;
        j["bootstrap"] = m.bootstrap;
        break;
    case ModelKind::Logistic: j["l2"] = m.l2; break;
    case ModelKind::Cart:
    case ModelKind::NaiveBayes: break;
    }
    return j;
}

SourceId source_id_from(const std::string& s) {
    if (s == "A") return SourceId::A;
    if (s == "B") return SourceId::B;
    bad_config("score_source must be 'A' or 'B'");
}

FusionStrategy strategy_from(const std::string& s) {
    if (s == "merge") return FusionStrategy::DataMerge;
    if (s == "inclusion") return FusionStrategy::ModelInclusion;
    if (s == "composition") return FusionStrategy::ModelComposition;
    bad_config("unknown fusion strategy '" + s + "'");
}

ScoreMode score_mode_from(const json& j) {
    ScoreMode m;
    if (j.is_string() && j.get<std::string>() == "in_sample") return m;
    if (j.is_object() && j.size() == 1 && j.contains("out_of_fold")) {
        m.kind = ScoreMode::Kind::OutOfFold;
        m.folds = j["out_of_fold"].get<int>();
        return m;
    }
    bad_config("score_mode must be \"in_sample\" or {\"out_of_fold\": k}");
}

json score_mode_json(const ScoreMode& m) {
    if (m.kind == ScoreMode::Kind::InSample) return "in_sample";
    return {{"out_of_fold", m.folds}};
}

FusionSpec fusion_from(const json& j) {
    reject_unknown(j, {"strategy", "base", "second", "score_source", "score_mode", "fold_seed"}, "fusion spec");
    FusionSpec f;
    f.strategy = strategy_from(j.at("strategy").get<std::string>());
    for (const auto& b : j.at("base")) f.base.push_back(model_from(b));
    if (j.contains("second") && !j["second"].is_null()) f.second = model_from(j["second"]);
    if (j.contains("score_source")) f.score_source = source_id_from(j["score_source"].get<std::string>());
    if (j.contains("score_mode")) f.score_mode = score_mode_from(j["score_mode"]);
    if (j.contains("fold_seed")) f.fold_seed = j["fold_seed"].get<std::uint64_t>();
    f.validate();
    return f;
}

json fusion_json(const FusionSpec& f) {
    json base = json::array();
    for (const auto& b : f.base) base.push_back(model_json(b));
    json j = {{"strategy", to_string(f.strategy)}, {"base", std::move(base)}};
    if (f.second) j["second"] = model_json(*f.second);
    j["score_source"] = f.score_source == SourceId::A ? "A" : "B";
    j["score_mode"] = score_mode_json(f.score_mode);
    j["fold_seed"] = f.fold_seed;
    return j;
}

PipelineConfig preprocess_from(const json& j) {
    reject_unknown(j,
                   {"baseline_window", "smooth_sigma", "tic_lo", "tic_hi", "qc_sd_limit", "gap_penalty",
                    "match_bandwidth"},
                   "pipeline config");
    PipelineConfig c;
    if (j.contains("baseline_window")) c.baseline_window = j["baseline_window"].get<int>();
    if (j.contains("smooth_sigma")) c.smooth_sigma = j["smooth_sigma"].get<double>();
    if (j.contains("tic_lo")) c.tic_lo = j["tic_lo"].get<double>();
    if (j.contains("tic_hi")) c.tic_hi = j["tic_hi"].get<double>();
    if (j.contains("qc_sd_limit")) {
        const auto& v = j["qc_sd_limit"];
        c.qc_sd_limit = (v.is_string() && v.get<std::string>() == "inf") ? std::numeric_limits<double>::infinity()
                                                                         : v.get<double>();
    }
    if (j.contains("gap_penalty")) c.gap_penalty = j["gap_penalty"].get<double>();
    if (j.contains("match_bandwidth")) c.match_bandwidth = j["match_bandwidth"].get<double>();
    c.validate();
    return c;
}

json preprocess_json(const PipelineConfig& c) {
    return {{"baseline_window", c.baseline_window},
            {"smooth_sigma", c.smooth_sigma},
            {"tic_lo", c.tic_lo},
            {"tic_hi", c.tic_hi},
            {"qc_sd_limit", std::isinf(c.qc_sd_limit) ? json("inf") : json(c.qc_sd_limit)},
            {"gap_penalty", c.gap_penalty},
            {"match_bandwidth", c.match_bandwidth}};
}

SourceSelection selection_from(const std::string& s) {
    if (s == "A") return SourceSelection::A;
    if (s == "B") return SourceSelection::B;
    if (s == "MERGED") return SourceSelection::Merged;
    bad_config("source must be A, B or MERGED");
}

PipelineSpec pipeline_from(const json& j) {
    reject_unknown(j, {"id", "source", "ttest_k", "model", "fusion"}, "pipeline spec");
    PipelineSpec p;
    p.id = j.at("id").get<std::string>();
    if (j.contains("source")) p.source = selection_from(j["source"].get<std::string>());
    if (j.contains("ttest_k") && !j["ttest_k"].is_null()) p.ttest_k = j["ttest_k"].get<std::size_t>();
    if (j.contains("model")) p.model = model_from(j["model"]);
    if (j.contains("fusion")) p.fusion = fusion_from(j["fusion"]);
    p.validate();
    return p;
}

json pipeline_json(const PipelineSpec& p) {
    json j = {{"id", p.id}, {"source", to_string(p.source)}};
    if (p.ttest_k) j["ttest_k"] = *p.ttest_k;
    if (p.model) j["model"] = model_json(*p.model);
    if (p.fusion) j["fusion"] = fusion_json(*p.fusion);
    return j;
}

} // namespace

ModelSpec model_spec_from_json(const std::string& text) {
    try {
        return model_from(json::parse(text));
    } catch (const json::exception& e) {
        bad_config(std::string("model spec: ") + e.what());
    }
}

std::string model_spec_to_json(const ModelSpec& spec) {
    return model_json(spec).dump();
}

PipelineConfig pipeline_config_from_json(const std::string& text) {
    try {
        return preprocess_from(json::parse(text));
    } catch (const json::exception& e) {
        bad_config(std::string("pipeline config: ") + e.what());
    }
}

std::string pipeline_config_to_json(const PipelineConfig& cfg) {
    return preprocess_json(cfg).dump(1);
}

void PipelineSpec::validate() const {
    if (id.empty()) bad_config("pipeline spec without id");
    if (model.has_value() == fusion.has_value())
        bad_config("pipeline '" + id + "' must name exactly one of model / fusion");
    if (fusion) fusion->validate();
    if (ttest_k && source == SourceSelection::B && !fusion)
        bad_config("pipeline '" + id + "': ttest_k selects spectral columns and needs source A or MERGED");
    if (ttest_k && *ttest_k == 0) bad_config("pipeline '" + id + "': ttest_k must be positive");
}

void ExperimentConfig::validate() const {
    preprocess.validate();
    if (neighborhood == 0) bad_config("neighborhood must be positive");
    if (pipelines.empty()) bad_config("experiment lists no pipelines");
    std::set<std::string> ids;
    for (const auto& p : pipelines) {
        p.validate();
        if (!ids.insert(p.id).second) bad_config("duplicate pipeline id '" + p.id + "'");
    }
    for (const auto& c : comparisons)
        if (!ids.count(c.a) || !ids.count(c.b))
            bad_config("comparison names an unknown pipeline ('" + c.a + "' vs '" + c.b + "')");
    if (split.n_repeats < 2 && !comparisons.empty()) bad_config("comparisons need at least two repeats");
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text, const fs::path& base_dir) {
    ExperimentConfig c;
    try {
        const json j = json::parse(text);
        reject_unknown(j,
                       {"format", "version", "inputs", "preprocess", "neighborhood", "apply_qc", "split",
                        "pipelines", "comparisons"},
                       "experiment config");
        if (j.value("format", "") != "biofuse.experiment") bad_config("not an experiment config");
        if (j.value("version", 0) != 1) bad_config("unsupported experiment config version");
        const auto& in = j.at("inputs");
        reject_unknown(in, {"spectra", "panel", "labels"}, "inputs");
        auto resolve = [&](const char* key) {
            fs::path p = in.at(key).get<std::string>();
            return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
        };
        c.spectra_path = resolve("spectra");
        c.panel_path = resolve("panel");
        c.labels_path = resolve("labels");
        if (j.contains("preprocess")) c.preprocess = preprocess_from(j["preprocess"]);
        if (j.contains("neighborhood")) c.neighborhood = j["neighborhood"].get<std::size_t>();
        if (j.contains("apply_qc")) c.apply_qc = j["apply_qc"].get<bool>();
        if (j.contains("split")) {
            const auto& s = j["split"];
            reject_unknown(s, {"train_fraction", "n_repeats", "seed", "stratified"}, "split");
            if (s.contains("train_fraction")) c.split.train_fraction = s["train_fraction"].get<double>();
            if (s.contains("n_repeats")) c.split.n_repeats = s["n_repeats"].get<int>();
            if (s.contains("seed")) c.split.seed = s["seed"].get<std::uint64_t>();
            if (s.contains("stratified")) c.split.stratified = s["stratified"].get<bool>();
        }
        for (const auto& p : j.at("pipelines")) c.pipelines.push_back(pipeline_from(p));
        if (j.contains("comparisons"))
            for (const auto& e : j["comparisons"]) {
                reject_unknown(e, {"a", "b", "metric"}, "comparison");
                c.comparisons.push_back({e.at("a").get<std::string>(), e.at("b").get<std::string>(),
                                         metric_from_string(e.value("metric", "auc"))});
            }
    } catch (const json::exception& e) {
        bad_config(std::string("experiment config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string ExperimentConfig::to_json() const {
    json pipes = json::array();
    for (const auto& p : pipelines) pipes.push_back(pipeline_json(p));
    json comps = json::array();
    for (const auto& c : comparisons) comps.push_back({{"a", c.a}, {"b", c.b}, {"metric", to_string(c.metric)}});
    const json j = {{"format", "biofuse.experiment"},
                    {"version", 1},
                    {"inputs",
                     {{"spectra", spectra_path.string()},
                      {"panel", panel_path.string()},
                      {"labels", labels_path.string()}}},
                    {"preprocess", preprocess_json(preprocess)},
                    {"neighborhood", neighborhood},
                    {"apply_qc", apply_qc},
                    {"split",
                     {{"train_fraction", split.train_fraction},
                      {"n_repeats", split.n_repeats},
                      {"seed", split.seed},
                      {"stratified", split.stratified}}},
                    {"pipelines", std::move(pipes)},
                    {"comparisons", std::move(comps)}};
    return j.dump(1);
}

// ---------------------------------------------------------------------------
// Data preparation

Spectrum per_sample_preprocess(const Spectrum& raw, const PipelineConfig& cfg) {
    return smooth(correct_baseline(variance_stabilize(raw), cfg), cfg);
}

SplitFeatures featurize_split(const std::vector<Spectrum>& processed, std::span<const std::size_t> train,
                              const PipelineConfig& cfg, std::size_t neighborhood) {
    if (train.empty()) fail(ErrorCode::EmptyTrainingSet, "no training spectra");
    double target = 0.0;
    for (std::size_t i : train) target += windowed_tic(processed.at(i), cfg);
    target /= static_cast<double>(train.size());

    std::vector<Spectrum> normalized;
    normalized.reserve(processed.size());
    for (const auto& s : processed) normalized.push_back(normalize_tic(s, cfg, target));

    std::vector<Spectrum> training;
    for (std::size_t i : train) training.push_back(normalized[i]);
    const Spectrum reference = mean_profile(training);

    SplitFeatures out;
    std::vector<Spectrum> aligned;
    aligned.reserve(normalized.size());
    for (const auto& s : normalized) {
        auto r = align(s, reference, cfg);
        out.no_peaks.push_back(r.alignment.no_peaks);
        aligned.push_back(std::move(r.warped));
    }
    training.clear();
    for (std::size_t i : train) training.push_back(aligned[i]);
    out.peak_model = build_peak_model(mean_profile(training), neighborhood);
    out.features = extract_features(aligned, out.peak_model);
    return out;
}

ExperimentData ExperimentData::assemble(const std::vector<Spectrum>& raw_spectra, const Dataset& panel,
                                        const std::vector<std::pair<std::string, Label>>& labels,
                                        const PipelineConfig& cfg, bool apply_qc) {
    cfg.validate();
    std::unordered_map<std::string, Label> label_of;
    for (const auto& [id, l] : labels)
        if (!label_of.emplace(id, l).second) fail(ErrorCode::SampleMismatch, "duplicate label for '" + id + "'");
    std::unordered_map<std::string, std::size_t> panel_row;
    for (std::size_t i = 0; i < panel.sample_ids.size(); ++i)
        if (!panel_row.emplace(panel.sample_ids[i], i).second)
            fail(ErrorCode::SampleMismatch, "duplicate panel row for '" + panel.sample_ids[i] + "'");

    std::vector<bool> excluded(raw_spectra.size(), false);
    ExperimentData d;
    if (apply_qc) {
        const auto qc = qc_filter(raw_spectra, cfg);
        excluded = qc.is_excluded;
        for (std::size_t i = 0; i < raw_spectra.size(); ++i)
            if (excluded[i]) d.qc_excluded.push_back(raw_spectra[i].sample_id);
    }

    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < raw_spectra.size(); ++i) {
        if (excluded[i]) continue;
        const auto& id = raw_spectra[i].sample_id;
        const auto l = label_of.find(id);
        const auto p = panel_row.find(id);
        if (l == label_of.end()) fail(ErrorCode::SampleMismatch, "no label for sample '" + id + "'");
        if (p == panel_row.end()) fail(ErrorCode::SampleMismatch, "no panel row for sample '" + id + "'");
        d.spectra.push_back(per_sample_preprocess(raw_spectra[i], cfg));
        d.labels.push_back(l->second);
        d.sample_ids.push_back(id);
        rows.push_back(p->second);
    }
    if (d.spectra.empty()) fail(ErrorCode::SampleMismatch, "no samples left after matching sources");
    d.panel = panel.rows(rows);
    d.panel.y = d.labels;
    d.panel.sample_ids = d.sample_ids;
    return d;
}

SpectralFeaturizer::SpectralFeaturizer(const ExperimentData& data, PipelineConfig cfg, std::size_t neighborhood)
    : data_(data), cfg_(cfg), neighborhood_(neighborhood) {}

std::shared_ptr<const SplitFeatures> SpectralFeaturizer::features(std::span<const std::size_t> train) const {
    std::vector<std::size_t> key(train.begin(), train.end());
    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    auto sf = std::make_shared<const SplitFeatures>(featurize_split(data_.spectra, train, cfg_, neighborhood_));
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.emplace(std::move(key), std::move(sf)).first->second;
}

// ---------------------------------------------------------------------------
// Pipelines

namespace {

class FittedModelPipeline final : public FittedPipeline {
public:
    FittedModelPipeline(Dataset x, TrainedModel m) : x_(std::move(x)), model_(std::move(m)) {}
    double score(std::size_t i) const override { return model_.score(x_.X.row(i)); }
    Label label(std::size_t i) const override { return model_.label(x_.X.row(i)); }
    bool converged() const override { return model_.converged(); }

private:
    Dataset x_;
    TrainedModel model_;
};

class FittedFusionPipeline final : public FittedPipeline {
public:
    FittedFusionPipeline(Dataset a, Dataset b, FusedModel m) : a_(std::move(a)), b_(std::move(b)), model_(std::move(m)) {}
    double score(std::size_t i) const override { return model_.predict_score(a_.X.row(i), b_.X.row(i)); }
    Label label(std::size_t i) const override { return model_.predict_label(a_.X.row(i), b_.X.row(i)); }
    bool converged() const override {
        for (const auto& m : model_.base)
            if (!m.converged()) return false;
        return !model_.second || model_.second->converged();
    }

private:
    Dataset a_;
    Dataset b_;
    FusedModel model_;
};

ModelSpec reseed(ModelSpec m, std::uint64_t seed) {
    m.seed = derive_seed(m.seed, seed);
    return m;
}

class ExperimentPipeline final : public Pipeline {
public:
    ExperimentPipeline(PipelineSpec spec, const ExperimentData& data, std::shared_ptr<const SpectralFeaturizer> f)
        : spec_(std::move(spec)), data_(data), featurizer_(std::move(f)) {}

    std::string id() const override { return spec_.id; }

    std::unique_ptr<FittedPipeline> fit(std::span<const std::size_t> train, std::uint64_t seed) const override {
        Dataset a;
        if (needs_spectral()) {
            a = featurizer_->features(train)->features;
            a.y = data_.labels;
            if (spec_.ttest_k) a = a.columns(t_test_rank(a.rows(train), *spec_.ttest_k));
        }
        Dataset b = data_.panel;
        b.y = data_.labels;

        if (spec_.fusion) {
            FusionSpec fs = *spec_.fusion;
            for (auto& m : fs.base) m = reseed(m, seed);
            if (fs.second) fs.second = reseed(*fs.second, seed);
            fs.fold_seed = derive_seed(fs.fold_seed, seed);
            auto fm = train_fusion(fs, a.rows(train), b.rows(train));
            return std::make_unique<FittedFusionPipeline>(std::move(a), std::move(b), std::move(fm));
        }
        Dataset x;
        switch (spec_.source) {
        case SourceSelection::A: x = std::move(a); break;
        case SourceSelection::B: x = std::move(b); break;
        case SourceSelection::Merged: x = data_merge(a, b); break;
        }
        auto model = train_model(x.rows(train), reseed(*spec_.model, seed));
        return std::make_unique<FittedModelPipeline>(std::move(x), std::move(model));
    }

    bool needs_spectral() const { return spec_.fusion || spec_.source != SourceSelection::B; }

private:
    PipelineSpec spec_;
    const ExperimentData& data_;
    std::shared_ptr<const SpectralFeaturizer> featurizer_;
};

} // namespace

std::unique_ptr<Pipeline> make_pipeline(const PipelineSpec& spec, const ExperimentData& data,
                                        std::shared_ptr<const SpectralFeaturizer> featurizer) {
    spec.validate();
    return std::make_unique<ExperimentPipeline>(spec, data, std::move(featurizer));
}

const EvalReport& ExperimentResult::report(const std::string& id) const {
    for (const auto& r : reports)
        if (r.pipeline_id == id) return r;
    fail(ErrorCode::ConfigInvalid, "no report for pipeline '" + id + "'");
}

ExperimentResult run_experiments(const std::vector<PipelineSpec>& pipelines, const ExperimentData& data,
                                 const SplitParams& split, const std::vector<Comparison>& comparisons,
                                 const PipelineConfig& cfg, std::size_t neighborhood, unsigned threads) {
    ExperimentResult res;
    res.plan = make_splits(data.labels, split);
    auto featurizer = std::make_shared<const SpectralFeaturizer>(data, cfg, neighborhood);
    std::vector<std::unique_ptr<Pipeline>> pipes;
    bool spectral = false;
    for (const auto& spec : pipelines) {
        pipes.push_back(make_pipeline(spec, data, featurizer));
        spectral = spectral || spec.fusion || spec.source != SourceSelection::B;
    }
    const std::size_t R = res.plan.repeats.size();
    if (spectral)
        parallel_for(R, [&](std::size_t r) { (void)featurizer->features(res.plan.repeats[r].train); }, threads);

    std::vector<std::vector<RepeatResult>> results(pipes.size(), std::vector<RepeatResult>(R));
    parallel_for(
        pipes.size() * R,
        [&](std::size_t job) {
            const std::size_t p = job / R;
            const std::size_t r = job % R;
            results[p][r] = evaluate_repeat(*pipes[p], data.labels, res.plan, r);
        },
        threads);
    for (std::size_t p = 0; p < pipes.size(); ++p)
        res.reports.push_back(make_report(pipes[p]->id(), res.plan, std::move(results[p])));
    for (const auto& c : comparisons)
        res.comparisons.push_back({c, corrected_t_test(res.report(c.a), res.report(c.b), c.metric,
                                                       res.plan.n_train(), res.plan.n_test())});
    return res;
}

// ---------------------------------------------------------------------------
// Reference suite

SynthConfig paper_suite_synth_config(std::uint64_t seed) {
    SynthConfig c;
    c.seed = derive_seed(seed, 0x5717);
    return c;
}

SynthConfig null_synth_config(std::uint64_t seed) {
    SynthConfig c = paper_suite_synth_config(seed);
    c.linear_effect_size = 0.0;
    c.panel_effect = 0.0;
    return c;
}

std::vector<PipelineSpec> paper_suite_pipelines(int n_trees) {
    auto spec = [&](ModelKind k) {
        ModelSpec m;
        m.kind = k;
        m.n_trees = n_trees;
        return m;
    };
    const ModelKind kinds[] = {ModelKind::Cart, ModelKind::NaiveBayes, ModelKind::Logistic,
                               ModelKind::RandomForest, ModelKind::Svm};
    std::vector<PipelineSpec> out;
    for (auto [src, name] : {std::pair{SourceSelection::B, "panel"}, std::pair{SourceSelection::A, "spectral"},
                             std::pair{SourceSelection::Merged, "merged"}})
        for (ModelKind k : kinds) {
            PipelineSpec p;
            p.id = std::string(name) + "_" + to_string(k);
            p.source = src;
            p.model = spec(k);
            out.push_back(std::move(p));
        }

    ScoreMode held_out;
    held_out.kind = ScoreMode::Kind::OutOfFold;
    held_out.folds = 5;
    for (auto [id, mode] : {std::pair{"composition_svmA_rfB_nb", ScoreMode{}},
                            std::pair{"composition_oof_svmA_rfB_nb", held_out}}) {
        PipelineSpec comp;
        comp.id = id;
        comp.fusion = FusionSpec{FusionStrategy::ModelComposition,
                                 {spec(ModelKind::Svm), spec(ModelKind::RandomForest)},
                                 spec(ModelKind::NaiveBayes),
                                 SourceId::A,
                                 mode,
                                 0};
        out.push_back(std::move(comp));
    }

    PipelineSpec inc_a;
    inc_a.id = "inclusion_svmA_panel_rf";
    inc_a.fusion = FusionSpec{FusionStrategy::ModelInclusion, {spec(ModelKind::Svm)}, spec(ModelKind::RandomForest),
                              SourceId::A, ScoreMode{}, 0};
    out.push_back(inc_a);

    PipelineSpec inc_b;
    inc_b.id = "inclusion_rfB_spectral_svm";
    inc_b.fusion = FusionSpec{FusionStrategy::ModelInclusion, {spec(ModelKind::RandomForest)}, spec(ModelKind::Svm),
                              SourceId::B, ScoreMode{}, 0};
    out.push_back(inc_b);

    PipelineSpec tt;
    tt.id = "ttest50_merged_rf";
    tt.source = SourceSelection::Merged;
    tt.ttest_k = 50;
    tt.model = spec(ModelKind::RandomForest);
    out.push_back(tt);
    return out;
}

std::vector<Comparison> paper_suite_comparisons() {
    return {{"composition_svmA_rfB_nb", "merged_rf", Metric::Auc},
            {"composition_oof_svmA_rfB_nb", "merged_rf", Metric::Auc},
            {"composition_oof_svmA_rfB_nb", "composition_svmA_rfB_nb", Metric::Auc},
            {"composition_svmA_rfB_nb", "panel_rf", Metric::Auc},
            {"composition_svmA_rfB_nb", "spectral_svm", Metric::Auc},
            {"panel_rf", "panel_svm", Metric::Error},
            {"spectral_svm", "spectral_rf", Metric::Error}};
}

PaperSuiteResult run_paper_suite(const PaperSuiteOptions& opts) {
    PaperSuiteResult out;
    out.synth = opts.synth ? *opts.synth : paper_suite_synth_config(opts.seed);
    const SynthData sd = generate(out.synth);
    std::vector<std::pair<std::string, Label>> labels;
    for (std::size_t i = 0; i < sd.labels.size(); ++i) labels.emplace_back(sd.panel.sample_ids[i], sd.labels[i]);
    const PipelineConfig cfg;
    const ExperimentData data = ExperimentData::assemble(sd.spectra, sd.panel, labels, cfg, true);
    out.qc_excluded = data.qc_excluded;

    SplitParams split;
    split.n_repeats = opts.n_repeats;
    split.seed = derive_seed(opts.seed, 0x5b17);
    auto pipelines = paper_suite_pipelines(opts.n_trees);
    for (auto& p : pipelines) {
        const auto s = derive_seed(opts.seed, std::stoull(fnv1a_hex(p.id), nullptr, 16));
        if (p.model) p.model->seed = s;
        if (p.fusion) p.fusion->fold_seed = s;
    }
    out.experiment =
        run_experiments(pipelines, data, split, paper_suite_comparisons(), cfg, 5, opts.threads);
    return out;
}

void write_paper_suite(const PaperSuiteResult& result, const PaperSuiteOptions& opts, const fs::path& out_dir) {
    std::vector<std::pair<std::string, std::string>> files;
    auto put = [&](const std::string& name, const std::string& content) {
        io::write_file_atomic(out_dir / name, content);
        files.emplace_back(name, fnv1a_hex(content));
    };

    const auto& reports = result.experiment.reports;
    for (const auto& r : reports) {
        put("reports/" + r.pipeline_id + ".json", r.to_json());
        put("roc/" + r.pipeline_id + ".csv", roc_csv(r));
    }

    json comps = json::array();
    for (const auto& c : result.experiment.comparisons)
        comps.push_back({{"a", c.comparison.a},
                         {"b", c.comparison.b},
                         {"metric", to_string(c.comparison.metric)},
                         {"t", std::isfinite(c.test.t) ? json(c.test.t) : json(c.test.t > 0 ? "inf" : "-inf")},
                         {"p", c.test.p},
                         {"significant", c.test.significant},
                         {"degenerate", c.test.degenerate},
                         {"k", c.test.k},
                         {"mean_difference", c.test.mean_difference}});
    put("comparisons.json", comps.dump(1));

    std::vector<EvalReport> table1(reports.begin(), reports.begin() + std::min<std::ptrdiff_t>(15, reports.size()));
    std::vector<EvalReport> table2(reports.begin() + std::min<std::ptrdiff_t>(15, reports.size()), reports.end());
    std::string tables = "Single-source and merged-data classifiers\n\n" + render_table(table1);
    if (!table2.empty()) tables += "\nFusion pipelines\n\n" + render_table(table2);
    tables += "\nCorrected resampled t-tests\n\n" + render_comparisons(result.experiment.comparisons);
    put("tables.txt", tables);
    put("synth_config.json", result.synth.to_json());

    json seeds = {{"suite", opts.seed}, {"synth", result.synth.seed}, {"split", result.experiment.plan.params.seed}};
    json config = {{"synth", json::parse(result.synth.to_json())},
                   {"n_repeats", opts.n_repeats},
                   {"n_trees", opts.n_trees}};
    json pipes = json::array();
    for (const auto& p : paper_suite_pipelines(opts.n_trees)) pipes.push_back(pipeline_json(p));
    config["pipelines"] = std::move(pipes);
    json file_list = json::object();
    for (const auto& [name, hash] : files) file_list[name] = hash;
    const json manifest = {{"format", "biofuse.manifest"},
                           {"version", 1},
                           {"tool_version", kVersion},
                           {"command", "paper-suite"},
                           {"config", config},
                           {"config_hash", fnv1a_hex(config.dump())},
                           {"seeds", seeds},
                           {"plan_fingerprint", result.experiment.plan.fingerprint()},
                           {"qc_excluded", result.qc_excluded},
                           {"files", file_list}};
    io::write_file_atomic(out_dir / "manifest.json", manifest.dump(1));
}

} // namespace biofuse
