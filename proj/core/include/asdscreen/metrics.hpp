#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace asdscreen {

struct ConfusionMatrix {
  long long tp = 0;
  long long fp = 0;
  long long tn = 0;
  long long fn = 0;

  long long total() const { return tp + fp + tn + fn; }
};

// Prediction rule: score >= threshold predicts positive.
ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels,
                          double threshold);

double accuracy(const ConfusionMatrix& cm);
// Exact ratios; zero denominators raise UndefinedMetricError naming the
// metric instead of silently reporting 0.
double precision(const ConfusionMatrix& cm);
double recall(const ConfusionMatrix& cm);

// Mann-Whitney AUC: over all positive/negative pairs, the fraction where the
// positive outscores the negative, ties counting one half. Needs both
// classes.
double auc(std::span<const double> scores, std::span<const int> labels);

// One point per distinct score (descending threshold sweep) plus the (0,0)
// endpoint; coordinates are (fpr, tpr), both nondecreasing. The trapezoidal
// area equals auc() up to rounding.
struct RocCurve {
  std::vector<std::pair<double, double>> points;
  double area() const;
};

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);
void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve);

struct EvalReport {
  long long n = 0;
  double threshold = 0.5;
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> auc;
  std::map<std::string, EvalReport> subgroups;  // one level deep only
  std::optional<double> accuracy_disparity;     // max-min subgroup accuracy
};

// Full evaluation at one threshold. With require_both_classes (the top-level
// mode), a single-class input raises UndefinedMetricError; otherwise the
// unavailable metrics stay unset.
EvalReport evaluate(std::span<const double> scores, std::span<const int> labels,
                    double threshold, bool require_both_classes = true);

// Per-group reports computed independently on each slice, plus the maximum
// pairwise accuracy gap across groups.
EvalReport subgroup_disparity(std::span<const double> scores, std::span<const int> labels,
                              std::span<const std::string> groups, double threshold);

std::string report_to_json(const EvalReport& report, const std::string& model_name = "",
                           const std::string& split_name = "");
EvalReport report_from_json(const std::string& text, std::string* model_name = nullptr);

}  // namespace asdscreen
