#pragma once

#include "biofuse/eval.hpp"
#include "biofuse/experiment.hpp"

#include <map>
#include <string>
#include <vector>

namespace biofuse {

struct ReportTables {
    std::string text;
    std::map<std::string, std::string> roc_csv; ///< pipeline id -> CSV
};

/// Mean and std rows of Error / SN / SP / AUC per pipeline, in percent with
/// two decimals. Repeats with a single-class test set are flagged.
/// Throws InvalidInput on an empty list.
ReportTables emit_report_tables(const std::vector<EvalReport>& reports);

std::string render_table(const std::vector<EvalReport>& reports);
std::string render_comparisons(const std::vector<ComparisonResult>& comparisons);

/// `repeat,fpr,tpr,threshold`, one line per ROC point; degenerate repeats are skipped.
std::string roc_csv(const EvalReport& report);

/// Two-decimal percent form used in the tables; "n/a" for NaN.
std::string format_percent(double fraction);

} // namespace biofuse
