#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace asdscreen {

enum class ReportFormat { markdown, csv, json };
ReportFormat report_format_from_string(const std::string& s);

// One comparison row. Computed rows carry fractions and are rendered with 2
// decimals for percentages and 4 for AUC; transcribed reference rows carry
// their published display strings and render verbatim.
struct ComparisonRow {
  std::string model;
  double accuracy_fraction = 0.0;  // used for sorting
  std::optional<std::string> accuracy_text;
  std::optional<std::string> auc_text;
  std::optional<std::string> precision_text;
  std::optional<std::string> recall_text;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
};

// Accepts evaluation reports (report_to_json output) and reference tables
// ({"models": [{"model", "accuracy", "auc", "precision", "recall"}, ...]},
// values as display strings).
ComparisonTable load_comparison_inputs(const std::vector<std::filesystem::path>& files);

// Rows sorted by accuracy descending (model name breaks ties). The extended
// view adds precision/recall columns. Output is locale-independent.
std::string render_comparison(const ComparisonTable& table, ReportFormat format,
                              bool extended);

}  // namespace asdscreen
