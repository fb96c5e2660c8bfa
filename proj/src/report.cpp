#include <algorithm>
#include <cstdio>
#include <sstream>

#include "tweetsat/csv.hpp"
#include "tweetsat/error.hpp"
#include "tweetsat/evalharness.hpp"
#include "tweetsat/io.hpp"

namespace tweetsat {
namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  std::size_t used = 0;
  const auto v = std::stoull(s, &used, 16);
  if (used != s.size()) throw Error("report: bad hex digest '" + s + "'");
  return v;
}

}  // namespace

ReportFormat report_format_for(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".json") return ReportFormat::json;
  if (ext == ".csv") return ReportFormat::csv;
  throw Error("report path " + path.string() + " must end in .json or .csv");
}

nlohmann::ordered_json report_to_json(const ExperimentReport& report, bool include_timing) {
  nlohmann::ordered_json j;
  j["format"] = "tweetsat-report";
  j["format_version"] = 1;
  j["config_hash"] = hex64(report.plan.config_hash());
  j["seed"] = report.plan.seed;
  j["plan"] = report.plan.to_json();
  nlohmann::ordered_json counts;
  for (int c = 0; c < kNumClasses; ++c) {
    counts[std::string(class_name(c))] = report.test_class_counts[static_cast<std::size_t>(c)];
  }
  j["split"] = {{"train_rows", report.train_rows},
                {"test_rows", report.test_rows},
                {"test_class_counts", counts}};
  j["baseline"] = {{"majority_class", class_name(report.majority_class)},
                   {"accuracy", report.majority_baseline}};
  j["notes"] = nlohmann::ordered_json::array();
  if (std::find(report.plan.feature_sets.begin(), report.plan.feature_sets.end(),
                FeatureSet::extended) != report.plan.feature_sets.end()) {
    j["notes"].push_back(kCoordinateFallbackNote);
  }
  j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : report.cells) {
    nlohmann::ordered_json jc;
    jc["model"] = model_name(c.model);
    jc["feature_set"] = feature_set_name(c.feature_set);
    jc["status"] = c.ok ? "ok" : "failed";
    jc["error"] = c.ok ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(c.error);
    jc["seed"] = c.seed;
    if (c.ok) {
      jc["accuracy"] = c.accuracy;
      jc["macro_f1"] = c.macro_f1;
      jc["confusion"] = c.confusion;
    } else {
      jc["accuracy"] = nullptr;
      jc["macro_f1"] = nullptr;
      jc["confusion"] = nullptr;
    }
    jc["train_rows"] = c.train_rows;
    jc["feature_columns"] = c.feature_columns;
    jc["fit_digest"] = hex64(c.fit_digest);
    jc["loss_trace"] = c.loss_trace;
    j["cells"].push_back(std::move(jc));
  }
  j["improvements"] = nlohmann::ordered_json::array();
  for (const auto& imp : report.improvements) {
    j["improvements"].push_back({{"model", model_name(imp.model)},
                                 {"text_only", imp.text_only},
                                 {"extended", imp.extended},
                                 {"improvement_pp", imp.improvement_pp}});
  }
  if (include_timing) {
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& c : report.cells) {
      cells.push_back({{"cell", c.name()}, {"seconds", c.seconds}});
    }
    j["timing"] = {{"total_seconds", report.total_seconds}, {"cells", cells}};
  }
  return j;
}

ExperimentReport report_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "tweetsat-report") throw Error("not a tweetsat report");
    if (j.at("format_version").get<int>() != 1) throw Error("unsupported report format version");
    ExperimentReport r;
    r.plan = plan_from_json(j.at("plan"));
    const auto& split = j.at("split");
    r.train_rows = split.at("train_rows").get<std::size_t>();
    r.test_rows = split.at("test_rows").get<std::size_t>();
    for (int c = 0; c < kNumClasses; ++c) {
      r.test_class_counts[static_cast<std::size_t>(c)] =
          split.at("test_class_counts").at(std::string(class_name(c))).get<std::size_t>();
    }
    r.majority_class = encode_label(j.at("baseline").at("majority_class").get<std::string>());
    r.majority_baseline = j.at("baseline").at("accuracy").get<double>();
    for (const auto& jc : j.at("cells")) {
      CellResult c;
      c.model = parse_model(jc.at("model").get<std::string>());
      c.feature_set = parse_feature_set(jc.at("feature_set").get<std::string>());
      c.ok = jc.at("status").get<std::string>() == "ok";
      if (!c.ok) c.error = jc.at("error").get<std::string>();
      c.seed = jc.at("seed").get<std::uint64_t>();
      if (c.ok) {
        c.accuracy = jc.at("accuracy").get<double>();
        c.macro_f1 = jc.at("macro_f1").get<double>();
        c.confusion = jc.at("confusion").get<Confusion>();
      }
      c.train_rows = jc.at("train_rows").get<std::size_t>();
      c.feature_columns = jc.at("feature_columns").get<std::size_t>();
      c.fit_digest = parse_hex64(jc.at("fit_digest").get<std::string>());
      c.loss_trace = jc.at("loss_trace").get<std::vector<double>>();
      r.cells.push_back(std::move(c));
    }
    for (const auto& ji : j.at("improvements")) {
      r.improvements.push_back({parse_model(ji.at("model").get<std::string>()),
                                ji.at("text_only").get<double>(), ji.at("extended").get<double>(),
                                ji.at("improvement_pp").get<double>()});
    }
    if (j.contains("timing")) {
      const auto& t = j.at("timing");
      r.total_seconds = t.at("total_seconds").get<double>();
      const auto& cells = t.at("cells");
      for (std::size_t i = 0; i < cells.size() && i < r.cells.size(); ++i) {
        r.cells[i].seconds = cells[i].at("seconds").get<double>();
      }
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("report: ") + e.what());
  }
}

std::string report_to_csv(const ExperimentReport& report) {
  std::ostringstream out;
  csv::write_row(out, {"model", "feature_set", "metric", "value"});
  for (const auto& c : report.cells) {
    std::vector<double> values = {c.accuracy, c.macro_f1};
    for (const auto& row : c.confusion) {
      for (auto v : row) values.push_back(static_cast<double>(v));
    }
    for (std::size_t m = 0; m < kCsvMetrics.size(); ++m) {
      csv::write_row(out, {std::string(model_name(c.model)), std::string(feature_set_name(c.feature_set)),
                           std::string(kCsvMetrics[m]), c.ok ? format_double(values[m]) : "NaN"});
    }
  }
  return out.str();
}

void emit_report(const ExperimentReport& report, const std::filesystem::path& path,
                 ReportFormat format, bool include_timing) {
  if (format == ReportFormat::json) {
    write_file_atomic(path, report_to_json(report, include_timing).dump(2) + "\n");
  } else {
    write_file_atomic(path, report_to_csv(report));
  }
}

std::string format_improvement_table(const ExperimentReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "majority baseline (%s): %.4f on %zu test rows\n",
                std::string(class_name(report.majority_class)).c_str(), report.majority_baseline,
                report.test_rows);
  out << line;
  std::snprintf(line, sizeof line, "%-6s %10s %10s %18s\n", "model", "TextOnly", "Extended",
                "improvement (pp)");
  out << line;
  for (const auto& imp : report.improvements) {
    std::snprintf(line, sizeof line, "%-6s %10.4f %10.4f %+18.2f\n",
                  std::string(model_name(imp.model)).c_str(), imp.text_only, imp.extended,
                  imp.improvement_pp);
    out << line;
  }
  for (const auto& c : report.cells) {
    if (report.find(c.model, FeatureSet::text_only) && report.find(c.model, FeatureSet::extended) &&
        c.ok) {
      continue;
    }
    if (c.ok) {
      std::snprintf(line, sizeof line, "%-6s %10.4f  (%s only)\n",
                    std::string(model_name(c.model)).c_str(), c.accuracy,
                    std::string(feature_set_name(c.feature_set)).c_str());
    } else {
      std::snprintf(line, sizeof line, "%-6s failed under %s\n", std::string(model_name(c.model)).c_str(),
                    std::string(feature_set_name(c.feature_set)).c_str());
    }
    out << line;
  }
  return out.str();
}

}  // namespace tweetsat
