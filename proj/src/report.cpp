#include "biofuse/report.hpp"

#include "biofuse/error.hpp"
#include "biofuse/io.hpp"

#include <cmath>
#include <cstdio>

namespace biofuse {

std::string format_percent(double fraction) {
    if (std::isnan(fraction)) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
    return buf;
}

namespace {

std::string pad(const std::string& s, std::size_t width, bool right) {
    if (s.size() >= width) return s;
    const std::string fill(width - s.size(), ' ');
    return right ? fill + s : s + fill;
}

std::size_t id_width(const std::vector<EvalReport>& reports) {
    std::size_t w = 8;
    for (const auto& r : reports) w = std::max(w, r.pipeline_id.size());
    return w + 2;
}

} // namespace

std::string render_table(const std::vector<EvalReport>& reports) {
    const std::size_t w = id_width(reports);
    const Metric metrics[] = {Metric::Error, Metric::Sensitivity, Metric::Specificity, Metric::Auc};
    std::string out = pad("pipeline", w, false) + pad("", 6, false);
    for (const char* h : {"Error", "SN", "SP", "AUC"}) out += pad(h, 9, true);
    out += "  flags\n";
    for (const auto& r : reports) {
        std::size_t single = 0, unconverged = 0;
        for (const auto& rr : r.repeats) {
            single += rr.single_class;
            unconverged += !rr.converged;
        }
        std::string flags;
        if (single) flags += "single-class test set in " + std::to_string(single) + " repeat(s)";
        if (unconverged) {
            if (!flags.empty()) flags += "; ";
            flags += "not converged in " + std::to_string(unconverged) + " repeat(s)";
        }
        out += pad(r.pipeline_id, w, false) + pad("mean", 6, false);
        for (Metric m : metrics) out += pad(format_percent(r.summary(m).mean), 9, true);
        out += flags.empty() ? "\n" : "  " + flags + "\n";
        out += pad("", w, false) + pad("std", 6, false);
        for (Metric m : metrics) out += pad(format_percent(r.summary(m).sd), 9, true);
        out += '\n';
    }
    return out;
}

std::string render_comparisons(const std::vector<ComparisonResult>& comparisons) {
    std::string out;
    for (const auto& c : comparisons) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s vs %s (%s): t = %.4f, p = %.4g, %s%s\n", c.comparison.a.c_str(),
                      c.comparison.b.c_str(), to_string(c.comparison.metric), c.test.t, c.test.p,
                      c.test.significant ? "significant at 0.05" : "not significant at 0.05",
                      c.test.degenerate ? " (zero variance)" : "");
        out += buf;
    }
    return out;
}

std::string roc_csv(const EvalReport& report) {
    std::string out = "repeat,fpr,tpr,threshold\n";
    for (std::size_t r = 0; r < report.repeats.size(); ++r)
        for (const auto& p : report.repeats[r].roc)
            out += std::to_string(r) + "," + io::format_double(p.fpr) + "," + io::format_double(p.tpr) + "," +
                   (std::isinf(p.threshold) ? std::string(p.threshold > 0 ? "inf" : "-inf")
                                            : io::format_double(p.threshold)) +
                   "\n";
    return out;
}

ReportTables emit_report_tables(const std::vector<EvalReport>& reports) {
    if (reports.empty()) fail(ErrorCode::InvalidInput, "no reports to tabulate");
    ReportTables t;
    t.text = render_table(reports);
    for (const auto& r : reports) t.roc_csv[r.pipeline_id] = roc_csv(r);
    return t;
}

} // namespace biofuse
