#include "biofuse/cli.hpp"

#include "biofuse/error.hpp"
#include "biofuse/eval.hpp"
#include "biofuse/experiment.hpp"
#include "biofuse/io.hpp"
#include "biofuse/peaks.hpp"
#include "biofuse/report.hpp"
#include "biofuse/spectra.hpp"
#include "biofuse/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <unordered_set>

namespace biofuse {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct SynthArgs {
    std::string config;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
};

struct PreprocessArgs {
    std::string in, config, out, qc_report;
};

struct PeaksArgs {
    std::string in, labels, out, model;
    std::size_t neighborhood = 5;
};

struct EvaluateArgs {
    std::string config, out, out_dir, pipeline;
    bool strict = false;
    unsigned threads = 0;
};

struct CompareArgs {
    std::string a, b, metric = "auc";
};

struct SuiteArgs {
    std::uint64_t seed = 7;
    std::string out_dir;
    int repeats = 40;
    int trees = 500;
    std::string synth_config;
    bool strict = false;
    unsigned threads = 0;
};

unsigned threads_or_default(unsigned t) {
    return t == 0 ? thread_budget() : t;
}

void check_converged(const std::vector<EvalReport>& reports) {
    for (const auto& r : reports)
        for (std::size_t k = 0; k < r.repeats.size(); ++k)
            if (!r.repeats[k].converged)
                fail(ErrorCode::DidNotConverge,
                     "pipeline '" + r.pipeline_id + "' hit the iteration cap in repeat " + std::to_string(k));
}

int cmd_synth(const SynthArgs& a) {
    SynthConfig cfg = a.config.empty() ? SynthConfig{} : SynthConfig::from_json(io::read_file(a.config));
    if (a.seed) cfg.seed = *a.seed;
    const auto data = generate(cfg);
    const fs::path dir = a.out_dir;
    io::write_file_atomic(dir / "spectra.csv", io::spectra_to_csv(data.spectra));
    io::write_file_atomic(dir / "panel.csv", io::dataset_to_csv(data.panel));
    io::write_file_atomic(dir / "labels.csv", io::labels_to_csv(data.panel.sample_ids, data.labels));
    io::write_file_atomic(dir / "truth.json", data.truth.to_json(cfg));
    std::cout << "wrote " << data.spectra.size() << " spectra, " << data.panel.n_features()
              << " panel features to " << dir.string() << "\n";
    return 0;
}

int cmd_preprocess(const PreprocessArgs& a) {
    const PipelineConfig cfg =
        a.config.empty() ? PipelineConfig{} : pipeline_config_from_json(io::read_file(a.config));
    const auto raw = io::spectra_from_csv(io::read_file(a.in));
    const auto qc = qc_filter(raw, cfg);

    std::vector<Spectrum> processed;
    for (std::size_t i = 0; i < raw.size(); ++i)
        if (!qc.is_excluded[i]) processed.push_back(per_sample_preprocess(raw[i], cfg));
    std::vector<std::size_t> all(processed.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    double target = 0.0;
    for (const auto& s : processed) target += windowed_tic(s, cfg);
    target /= static_cast<double>(processed.size());
    std::vector<Spectrum> normalized;
    for (const auto& s : processed) normalized.push_back(normalize_tic(s, cfg, target));
    const Spectrum reference = mean_profile(normalized);
    std::vector<Spectrum> aligned;
    std::size_t no_peaks = 0;
    for (const auto& s : normalized) {
        auto r = align(s, reference, cfg);
        no_peaks += r.alignment.no_peaks;
        aligned.push_back(std::move(r.warped));
    }
    io::write_file_atomic(a.out, io::spectra_to_csv(aligned));

    if (!a.qc_report.empty()) {
        json excluded = json::array();
        json all_z = json::array();
        for (std::size_t i = 0; i < raw.size(); ++i) {
            all_z.push_back({{"sample_id", raw[i].sample_id}, {"tic", qc.tic[i]}, {"z_score", qc.z_score[i]}});
            if (qc.is_excluded[i])
                excluded.push_back({{"sample_id", raw[i].sample_id}, {"tic", qc.tic[i]}, {"z_score", qc.z_score[i]}});
        }
        const json doc = {{"format", "biofuse.qc"},
                          {"version", 1},
                          {"mean_tic", qc.mean_tic},
                          {"sd_tic", qc.sd_tic},
                          {"qc_sd_limit", std::isinf(cfg.qc_sd_limit) ? json("inf") : json(cfg.qc_sd_limit)},
                          {"excluded", excluded},
                          {"samples", all_z}};
        io::write_file_atomic(a.qc_report, doc.dump(1));
    }
    std::cout << "kept " << aligned.size() << " of " << raw.size() << " spectra";
    if (no_peaks) std::cout << " (" << no_peaks << " aligned without peaks)";
    std::cout << "\n";
    return 0;
}

int cmd_peaks(const PeaksArgs& a) {
    auto batch = io::spectra_from_csv(io::read_file(a.in));
    if (!a.labels.empty()) {
        std::unordered_set<std::string> known;
        for (const auto& [id, l] : io::labels_from_csv(io::read_file(a.labels))) {
            (void)l;
            known.insert(id);
        }
        for (const auto& s : batch)
            if (!known.count(s.sample_id)) fail(ErrorCode::SampleMismatch, "no label for sample '" + s.sample_id + "'");
    }
    const PeakModel pm = build_peak_model(mean_profile(batch), a.neighborhood);
    io::write_file_atomic(a.out, io::dataset_to_csv(extract_features(batch, pm)));
    if (!a.model.empty()) io::write_file_atomic(a.model, pm.to_json());
    std::cout << pm.n_peaks() << " peaks\n";
    return 0;
}

int cmd_evaluate(const EvaluateArgs& a) {
    const fs::path cfg_path = a.config;
    const auto cfg = ExperimentConfig::from_json(io::read_file(cfg_path), cfg_path.parent_path());
    if (a.out.empty() == a.out_dir.empty()) fail(ErrorCode::ConfigInvalid, "give exactly one of --out / --out-dir");

    std::vector<PipelineSpec> pipelines = cfg.pipelines;
    std::vector<Comparison> comparisons = cfg.comparisons;
    if (!a.pipeline.empty()) {
        std::erase_if(pipelines, [&](const PipelineSpec& p) { return p.id != a.pipeline; });
        if (pipelines.empty()) fail(ErrorCode::ConfigInvalid, "no pipeline named '" + a.pipeline + "'");
        comparisons.clear();
    }
    if (!a.out.empty() && pipelines.size() != 1)
        fail(ErrorCode::ConfigInvalid, "--out takes a single pipeline; use --pipeline or --out-dir");

    const auto raw = io::spectra_from_csv(io::read_file(cfg.spectra_path));
    const auto panel = io::dataset_from_csv(io::read_file(cfg.panel_path), SourceTag::Panel);
    const auto labels = io::labels_from_csv(io::read_file(cfg.labels_path));
    const auto data = ExperimentData::assemble(raw, panel, labels, cfg.preprocess, cfg.apply_qc);
    const auto res = run_experiments(pipelines, data, cfg.split, comparisons, cfg.preprocess, cfg.neighborhood,
                                     threads_or_default(a.threads));
    if (a.strict) check_converged(res.reports);

    if (!a.out.empty()) {
        io::write_file_atomic(a.out, res.reports.front().to_json());
    } else {
        const fs::path dir = a.out_dir;
        const auto tables = emit_report_tables(res.reports);
        for (const auto& r : res.reports) {
            io::write_file_atomic(dir / "reports" / (r.pipeline_id + ".json"), r.to_json());
            io::write_file_atomic(dir / "roc" / (r.pipeline_id + ".csv"), tables.roc_csv.at(r.pipeline_id));
        }
        std::string text = tables.text;
        if (!res.comparisons.empty()) text += "\n" + render_comparisons(res.comparisons);
        io::write_file_atomic(dir / "tables.txt", text);
        const json manifest = {{"format", "biofuse.manifest"},
                               {"version", 1},
                               {"tool_version", kVersion},
                               {"command", "evaluate"},
                               {"config_hash", fnv1a_hex(cfg.to_json())},
                               {"seeds", {{"split", cfg.split.seed}}},
                               {"plan_fingerprint", res.plan.fingerprint()},
                               {"qc_excluded", data.qc_excluded}};
        io::write_file_atomic(dir / "manifest.json", manifest.dump(1));
    }
    std::cout << render_table(res.reports);
    if (!res.comparisons.empty()) std::cout << "\n" << render_comparisons(res.comparisons);
    return 0;
}

int cmd_compare(const CompareArgs& a) {
    const auto ra = EvalReport::from_json(io::read_file(a.a));
    const auto rb = EvalReport::from_json(io::read_file(a.b));
    const Metric m = metric_from_string(a.metric);
    if (ra.n_train != rb.n_train || ra.n_test != rb.n_test)
        fail(ErrorCode::PlanMismatch, "reports disagree on split sizes");
    const auto t = corrected_t_test(ra, rb, m, ra.n_train, ra.n_test);
    std::printf("t = %.6g\np = %.6g\nk = %zu\nmean_difference = %.6g\n%s%s\n", t.t, t.p, t.k, t.mean_difference,
                t.significant ? "significant at 0.05" : "not significant at 0.05",
                t.degenerate ? " (zero variance)" : "");
    return 0;
}

int cmd_suite(const SuiteArgs& a) {
    PaperSuiteOptions opts;
    opts.seed = a.seed;
    opts.n_repeats = a.repeats;
    opts.n_trees = a.trees;
    opts.threads = threads_or_default(a.threads);
    if (!a.synth_config.empty()) opts.synth = SynthConfig::from_json(io::read_file(a.synth_config));
    const auto res = run_paper_suite(opts);
    if (a.strict) check_converged(res.experiment.reports);
    write_paper_suite(res, opts, a.out_dir);
    std::cout << io::read_file(fs::path(a.out_dir) / "tables.txt");
    return 0;
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"biofuse: two-source biomarker classification with spectral preprocessing, "
                 "peak features, base classifiers, fusion and resampled evaluation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate a paired synthetic data set");
    synth->add_option("--config", synth_args.config, "Synthetic generator config (JSON)")->check(CLI::ExistingFile);
    synth->add_option("--out-dir", synth_args.out_dir, "Output directory")->required();
    synth->add_option("--seed", synth_args.seed, "Override the config seed");

    PreprocessArgs pre_args;
    auto* pre = app.add_subcommand("preprocess", "Stabilize, baseline-correct, smooth, normalize, QC and align spectra");
    pre->add_option("--in", pre_args.in, "Raw spectra CSV (mz,<id>,...)")->required();
    pre->add_option("--config", pre_args.config, "Pipeline config (JSON)");
    pre->add_option("--out", pre_args.out, "Preprocessed spectra CSV")->required();
    pre->add_option("--qc-report", pre_args.qc_report, "QC report (JSON)");

    PeaksArgs peaks_args;
    auto* pk = app.add_subcommand("peaks", "Build a peak model from the mean profile and extract features");
    pk->add_option("--in", peaks_args.in, "Preprocessed spectra CSV")->required();
    pk->add_option("--labels", peaks_args.labels, "Labels CSV used to check sample ids");
    pk->add_option("--out", peaks_args.out, "Feature CSV")->required();
    pk->add_option("--model", peaks_args.model, "Peak model output (JSON)");
    pk->add_option("--neighborhood", peaks_args.neighborhood, "Half-width of the feature window, index points")
        ->check(CLI::PositiveNumber);

    EvaluateArgs eval_args;
    auto* ev = app.add_subcommand("evaluate", "Run the pipelines of an experiment config over repeated splits");
    ev->add_option("--config", eval_args.config, "Experiment config (JSON)")->required();
    ev->add_option("--out", eval_args.out, "Report JSON for a single pipeline");
    ev->add_option("--out-dir", eval_args.out_dir, "Directory for all reports, ROC CSVs and tables");
    ev->add_option("--pipeline", eval_args.pipeline, "Run only this pipeline id");
    ev->add_flag("--strict", eval_args.strict, "Fail with exit code 3 when a solver hits its iteration cap");
    ev->add_option("--threads", eval_args.threads, "Worker threads (default: BIOFUSE_THREADS or all cores)");

    CompareArgs cmp_args;
    auto* cmp = app.add_subcommand("compare", "Corrected resampled paired t-test between two reports");
    cmp->add_option("--a", cmp_args.a, "First report JSON")->required();
    cmp->add_option("--b", cmp_args.b, "Second report JSON")->required();
    cmp->add_option("--metric", cmp_args.metric, "auc, error, sensitivity or specificity");

    SuiteArgs suite_args;
    auto* suite = app.add_subcommand("paper-suite", "Run the full single-source and fusion grid on synthetic data");
    suite->add_option("--seed", suite_args.seed, "Suite seed");
    suite->add_option("--out-dir", suite_args.out_dir, "Output directory")->required();
    suite->add_option("--repeats", suite_args.repeats, "Random splits")->check(CLI::PositiveNumber);
    suite->add_option("--trees", suite_args.trees, "Trees per forest")->check(CLI::PositiveNumber);
    suite->add_option("--synth-config", suite_args.synth_config, "Replace the default synthetic regime");
    suite->add_flag("--strict", suite_args.strict, "Fail with exit code 3 when a solver hits its iteration cap");
    suite->add_option("--threads", suite_args.threads, "Worker threads (default: BIOFUSE_THREADS or all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*synth) return cmd_synth(synth_args);
        if (*pre) return cmd_preprocess(pre_args);
        if (*pk) return cmd_peaks(peaks_args);
        if (*ev) return cmd_evaluate(eval_args);
        if (*cmp) return cmd_compare(cmp_args);
        if (*suite) return cmd_suite(suite_args);
    } catch (const Error& e) {
        std::cerr << "E:" << to_string(e.code()) << ": " << e.what() << "\n";
        return category_of(e.code()) == ErrorCategory::Numeric ? 3 : 2;
    } catch (const std::exception& e) {
        std::cerr << "E:Internal: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

} // namespace biofuse
