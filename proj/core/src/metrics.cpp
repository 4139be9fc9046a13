#include "asdscreen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "asdscreen/errors.hpp"

using ordered_json = nlohmann::ordered_json;

namespace asdscreen {

namespace {

void check_input(std::span<const double> scores, std::span<const int> labels) {
  if (scores.empty()) {
    throw ValueError("metrics need at least one sample");
  }
  if (scores.size() != labels.size()) {
    throw ShapeError("scores size " + std::to_string(scores.size()) +
                     " does not match labels size " + std::to_string(labels.size()));
  }
  for (int y : labels) {
    if (y != 0 && y != 1) {
      throw ValueError("labels must be 0 or 1, got " + std::to_string(y));
    }
  }
}

std::pair<long long, long long> class_totals(std::span<const int> labels) {
  long long neg = 0, pos = 0;
  for (int y : labels) (y == 1 ? pos : neg)++;
  return {neg, pos};
}

}  // namespace

ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels,
                          double threshold) {
  check_input(scores, labels);
  ConfusionMatrix cm;
  for (size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      (predicted ? cm.tp : cm.fn)++;
    } else {
      (predicted ? cm.fp : cm.tn)++;
    }
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) {
    throw UndefinedMetricError("accuracy undefined: no samples");
  }
  return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

double precision(const ConfusionMatrix& cm) {
  if (cm.tp + cm.fp == 0) {
    throw UndefinedMetricError("precision undefined: no positive predictions (tp+fp=0)");
  }
  return static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
}

double recall(const ConfusionMatrix& cm) {
  if (cm.tp + cm.fn == 0) {
    throw UndefinedMetricError("recall undefined: no positive labels (tp+fn=0)");
  }
  return static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_input(scores, labels);
  const auto [neg, pos] = class_totals(labels);
  if (neg == 0 || pos == 0) {
    throw UndefinedMetricError("auc undefined: needs both classes, got " +
                               std::to_string(pos) + " positive / " +
                               std::to_string(neg) + " negative");
  }

  // Rank-sum formulation with midranks for ties; exactly the pair-counting
  // value since all intermediate sums are half-integers.
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // 1-based ranks i+1..j share the midrank.
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) positive_rank_sum += midrank;
    }
    i = j;
  }
  const double p = static_cast<double>(pos);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(neg));
}

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_input(scores, labels);
  const auto [neg, pos] = class_totals(labels);
  if (neg == 0 || pos == 0) {
    throw UndefinedMetricError("roc_curve undefined: needs both classes");
  }
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.emplace_back(0.0, 0.0);
  long long tp = 0, fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    for (size_t k = i; k < j; ++k) {
      (labels[order[k]] == 1 ? tp : fp)++;
    }
    curve.points.emplace_back(static_cast<double>(fp) / static_cast<double>(neg),
                              static_cast<double>(tp) / static_cast<double>(pos));
    i = j;
  }
  return curve;
}

double RocCurve::area() const {
  double area = 0.0;
  for (size_t i = 1; i < points.size(); ++i) {
    area += (points[i].first - points[i - 1].first) *
            (points[i].second + points[i - 1].second) / 2.0;
  }
  return area;
}

void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "fpr,tpr\n";
  char buf[64];
  for (const auto& [fpr, tpr] : curve.points) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g\n", fpr, tpr);
    out << buf;
  }
}

EvalReport evaluate(std::span<const double> scores, std::span<const int> labels,
                    double threshold, bool require_both_classes) {
  check_input(scores, labels);
  EvalReport report;
  report.n = static_cast<long long>(scores.size());
  report.threshold = threshold;
  report.confusion = confusion(scores, labels, threshold);
  report.accuracy = accuracy(report.confusion);

  const auto [neg, pos] = class_totals(labels);
  if (require_both_classes && (neg == 0 || pos == 0)) {
    throw UndefinedMetricError("evaluation needs both classes in the split, got " +
                               std::to_string(pos) + " positive / " +
                               std::to_string(neg) + " negative");
  }
  if (report.confusion.tp + report.confusion.fp > 0) {
    report.precision = precision(report.confusion);
  } else if (require_both_classes) {
    // Top-level evaluation reports every metric or fails loudly.
    throw UndefinedMetricError("precision undefined: no positive predictions");
  }
  if (report.confusion.tp + report.confusion.fn > 0) {
    report.recall = recall(report.confusion);
  }
  if (neg > 0 && pos > 0) {
    report.auc = auc(scores, labels);
  }
  return report;
}

EvalReport subgroup_disparity(std::span<const double> scores, std::span<const int> labels,
                              std::span<const std::string> groups, double threshold) {
  check_input(scores, labels);
  if (groups.size() != scores.size()) {
    throw ShapeError("groups size does not match scores size");
  }
  std::vector<double> all_scores(scores.begin(), scores.end());
  std::vector<int> all_labels(labels.begin(), labels.end());
  EvalReport top = evaluate(all_scores, all_labels, threshold, false);

  std::map<std::string, std::pair<std::vector<double>, std::vector<int>>> slices;
  for (size_t i = 0; i < groups.size(); ++i) {
    slices[groups[i]].first.push_back(scores[i]);
    slices[groups[i]].second.push_back(labels[i]);
  }
  double lo = 1.0, hi = 0.0;
  for (const auto& [group, slice] : slices) {
    EvalReport r = evaluate(slice.first, slice.second, threshold, false);
    lo = std::min(lo, r.accuracy);
    hi = std::max(hi, r.accuracy);
    top.subgroups.emplace(group, std::move(r));
  }
  top.accuracy_disparity = hi - lo;
  return top;
}

namespace {

ordered_json report_body(const EvalReport& r) {
  ordered_json j;
  j["n"] = r.n;
  j["threshold"] = r.threshold;
  j["confusion"] = {{"tp", r.confusion.tp},
                    {"fp", r.confusion.fp},
                    {"tn", r.confusion.tn},
                    {"fn", r.confusion.fn}};
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision ? ordered_json(*r.precision) : ordered_json(nullptr);
  j["recall"] = r.recall ? ordered_json(*r.recall) : ordered_json(nullptr);
  j["auc"] = r.auc ? ordered_json(*r.auc) : ordered_json(nullptr);
  if (!r.subgroups.empty()) {
    ordered_json sub = ordered_json::object();
    for (const auto& [group, sr] : r.subgroups) {
      sub[group] = report_body(sr);
    }
    j["subgroups"] = sub;
    j["accuracy_disparity"] =
        r.accuracy_disparity ? ordered_json(*r.accuracy_disparity) : ordered_json(nullptr);
  }
  return j;
}

EvalReport report_body_from_json(const ordered_json& j) {
  EvalReport r;
  r.n = j.at("n").get<long long>();
  r.threshold = j.at("threshold").get<double>();
  const auto& cm = j.at("confusion");
  r.confusion.tp = cm.at("tp").get<long long>();
  r.confusion.fp = cm.at("fp").get<long long>();
  r.confusion.tn = cm.at("tn").get<long long>();
  r.confusion.fn = cm.at("fn").get<long long>();
  r.accuracy = j.at("accuracy").get<double>();
  if (!j.at("precision").is_null()) r.precision = j.at("precision").get<double>();
  if (!j.at("recall").is_null()) r.recall = j.at("recall").get<double>();
  if (!j.at("auc").is_null()) r.auc = j.at("auc").get<double>();
  if (j.contains("subgroups")) {
    for (auto it = j.at("subgroups").begin(); it != j.at("subgroups").end(); ++it) {
      r.subgroups.emplace(it.key(), report_body_from_json(it.value()));
    }
    if (j.contains("accuracy_disparity") && !j.at("accuracy_disparity").is_null()) {
      r.accuracy_disparity = j.at("accuracy_disparity").get<double>();
    }
  }
  return r;
}

}  // namespace

std::string report_to_json(const EvalReport& report, const std::string& model_name,
                           const std::string& split_name) {
  ordered_json j;
  if (!model_name.empty()) j["model"] = model_name;
  if (!split_name.empty()) j["split"] = split_name;
  ordered_json body = report_body(report);
  for (auto it = body.begin(); it != body.end(); ++it) {
    j[it.key()] = it.value();
  }
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text, std::string* model_name) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed report JSON: ") + e.what());
  }
  try {
    if (model_name) *model_name = j.value("model", "");
    return report_body_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report JSON missing fields: ") + e.what());
  }
}

}  // namespace asdscreen
