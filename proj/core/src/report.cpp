#include "asdscreen/report.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "asdscreen/errors.hpp"
#include "asdscreen/metrics.hpp"

using ordered_json = nlohmann::ordered_json;

namespace asdscreen {

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "markdown") return ReportFormat::markdown;
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw ConfigError("unknown report format '" + s + "' (markdown|csv|json)");
}

namespace {

std::string fmt(double v, int decimals) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string undefined_cell() { return "n/a"; }

ComparisonRow row_from_eval_report(const std::string& text, const std::string& fallback_name) {
  std::string model;
  EvalReport r = report_from_json(text, &model);
  ComparisonRow row;
  row.model = model.empty() ? fallback_name : model;
  row.accuracy_fraction = r.accuracy;
  row.accuracy_text = fmt(r.accuracy * 100.0, 2);
  row.auc_text = r.auc ? std::optional(fmt(*r.auc, 4)) : std::nullopt;
  row.precision_text = r.precision ? std::optional(fmt(*r.precision * 100.0, 2)) : std::nullopt;
  row.recall_text = r.recall ? std::optional(fmt(*r.recall * 100.0, 2)) : std::nullopt;
  return row;
}

std::vector<ComparisonRow> rows_from_reference_table(const ordered_json& j,
                                                     const std::string& file) {
  std::vector<ComparisonRow> rows;
  for (const auto& entry : j.at("models")) {
    ComparisonRow row;
    try {
      row.model = entry.at("model").get<std::string>();
      row.accuracy_text = entry.at("accuracy").get<std::string>();
      row.auc_text = entry.at("auc").get<std::string>();
      if (entry.contains("precision")) {
        row.precision_text = entry.at("precision").get<std::string>();
      }
      if (entry.contains("recall")) {
        row.recall_text = entry.at("recall").get<std::string>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(file + ": " + e.what());
    }
    row.accuracy_fraction = std::strtod(row.accuracy_text->c_str(), nullptr) / 100.0;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

ComparisonTable load_comparison_inputs(const std::vector<std::filesystem::path>& files) {
  if (files.empty()) throw ConfigError("compare needs at least one report file");
  ComparisonTable table;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open report " + file.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    ordered_json j;
    try {
      j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(file.string() + ": " + e.what());
    }
    if (j.is_object() && j.contains("models")) {
      for (auto& row : rows_from_reference_table(j, file.string())) {
        table.rows.push_back(std::move(row));
      }
    } else {
      table.rows.push_back(row_from_eval_report(text, file.stem().string()));
    }
  }
  return table;
}

std::string render_comparison(const ComparisonTable& input, ReportFormat format,
                              bool extended) {
  ComparisonTable table = input;
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const ComparisonRow& a, const ComparisonRow& b) {
                     if (a.accuracy_fraction != b.accuracy_fraction) {
                       return a.accuracy_fraction > b.accuracy_fraction;
                     }
                     return a.model < b.model;
                   });

  std::vector<std::string> header = {"model", "accuracy (%)", "auc"};
  if (extended) {
    header.push_back("precision (%)");
    header.push_back("recall (%)");
  }
  auto cells = [&](const ComparisonRow& r) {
    std::vector<std::string> out = {r.model, r.accuracy_text.value_or(undefined_cell()),
                                    r.auc_text.value_or(undefined_cell())};
    if (extended) {
      out.push_back(r.precision_text.value_or(undefined_cell()));
      out.push_back(r.recall_text.value_or(undefined_cell()));
    }
    return out;
  };

  std::string out;
  switch (format) {
    case ReportFormat::csv: {
      out = extended ? "model,accuracy,auc,precision,recall\n" : "model,accuracy,auc\n";
      for (const auto& r : table.rows) {
        const auto row = cells(r);
        for (size_t i = 0; i < row.size(); ++i) {
          out += (i ? "," : "") + row[i];
        }
        out += "\n";
      }
      break;
    }
    case ReportFormat::json: {
      ordered_json j = ordered_json::array();
      for (const auto& r : table.rows) {
        ordered_json o;
        o["model"] = r.model;
        o["accuracy"] = r.accuracy_text.value_or(undefined_cell());
        o["auc"] = r.auc_text.value_or(undefined_cell());
        if (extended) {
          o["precision"] = r.precision_text.value_or(undefined_cell());
          o["recall"] = r.recall_text.value_or(undefined_cell());
        }
        j.push_back(o);
      }
      out = j.dump(2) + "\n";
      break;
    }
    case ReportFormat::markdown: {
      std::vector<std::vector<std::string>> grid;
      grid.push_back(header);
      for (const auto& r : table.rows) grid.push_back(cells(r));
      std::vector<size_t> width(header.size(), 0);
      for (const auto& row : grid) {
        for (size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
      }
      auto emit_row = [&](const std::vector<std::string>& row) {
        out += "|";
        for (size_t i = 0; i < row.size(); ++i) {
          out += " " + row[i] + std::string(width[i] - row[i].size(), ' ') + " |";
        }
        out += "\n";
      };
      emit_row(grid[0]);
      out += "|";
      for (size_t i = 0; i < header.size(); ++i) {
        out += std::string(width[i] + 2, '-') + "|";
      }
      out += "\n";
      for (size_t i = 1; i < grid.size(); ++i) emit_row(grid[i]);
      break;
    }
  }
  return out;
}

}  // namespace asdscreen
