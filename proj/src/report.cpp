#include "evaluation.hpp"

#include <charconv>
#include <cstddef>
#include <string>

#include <json.hpp>

#include "common.hpp"
#include "text.hpp"

namespace fdx {

namespace {

using nlohmann::json;

json confusion_to_json(const Confusion& c) {
  json rows = json::array();
  for (const auto& row : c.m) {
    json r = json::array();
    for (std::int64_t v : row) r.push_back(v);
    rows.push_back(std::move(r));
  }
  return rows;
}

json per_class_to_json(const std::array<ClassMetrics, kNumClasses>& per_class) {
  json out = json::object();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const ClassMetrics& cm = per_class[c];
    out[fault_class_name(static_cast<FaultClass>(c))] = {
        {"precision", cm.precision}, {"recall", cm.recall}, {"f_beta", cm.f_beta},
        {"f1", cm.f1},               {"support", cm.support},
    };
  }
  return out;
}

json aggregate_to_json(const AggregateMetrics& agg) {
  return {
      {"precision", agg.precision},
      {"recall", agg.recall},
      {"f_beta", agg.f_beta},
      {"f1", agg.f1},
      {"f_beta_of_means", agg.f_beta_of_means},
      {"f1_of_means", agg.f1_of_means},
  };
}

// Fixed four-decimal rendering for the Markdown tables.
std::string fmt4(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 4);
  return std::string(buf, res.ptr);
}

std::string md_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '|') out += "\\|";
    else out += ch;
  }
  return out;
}

double metric_or_zero(const json& obj, const char* key) {
  if (!obj.contains(key)) return 0.0;
  return obj.at(key).get<double>();
}

void append_metrics_table(std::string& md, const json& model, double beta) {
  const std::string fb = "F_" + format_double(beta);
  md += "| Class | Precision | Recall | " + fb + " | F_1 | Support |\n";
  md += "|---|---:|---:|---:|---:|---:|\n";
  const json& per_class = model.at("per_class");
  for (int c = 0; c < kNumClasses; ++c) {
    const std::string name = fault_class_name(static_cast<FaultClass>(c));
    const json& cm = per_class.at(name);
    md += "| " + name + " | " + fmt4(metric_or_zero(cm, "precision")) + " | " +
          fmt4(metric_or_zero(cm, "recall")) + " | " + fmt4(metric_or_zero(cm, "f_beta")) +
          " | " + fmt4(metric_or_zero(cm, "f1")) + " | " +
          format_int(cm.at("support").get<std::int64_t>()) + " |\n";
  }
}

void append_confusion_table(std::string& md, const json& confusion) {
  md += "| truth \\\\ predicted | ";
  for (int c = 0; c < kNumClasses; ++c) {
    md += fault_class_name(static_cast<FaultClass>(c)) + " | ";
  }
  md += "\n|---|---:|---:|---:|\n";
  for (int t = 0; t < kNumClasses; ++t) {
    md += "| " + fault_class_name(static_cast<FaultClass>(t)) + " | ";
    for (int p = 0; p < kNumClasses; ++p) {
      md += format_int(confusion.at(static_cast<std::size_t>(t))
                           .at(static_cast<std::size_t>(p))
                           .get<std::int64_t>()) +
            " | ";
    }
    md += "\n";
  }
}

}  // namespace

std::string report_to_json(const EvaluationReport& report) {
  json j;
  j["mode"] = report.mode;
  j["beta"] = report.config.beta;
  j["k_folds"] = report.config.k_folds;
  j["seed"] = report.config.seed;
  j["averaging"] = averaging_name(report.config.averaging);
  j["fold_mode"] = fold_mode_name(report.config.fold_mode);
  j["group_by_unit"] = report.config.group_by_unit;
  json models = json::array();
  for (const ModelReport& mr : report.models) {
    json m;
    m["model"] = mr.model;
    m["config"] = mr.config.to_json();
    m["confusion"] = confusion_to_json(mr.overall.confusion);
    m["per_class"] = per_class_to_json(mr.overall.per_class);
    m["aggregate"] = aggregate_to_json(mr.aggregate);
    if (!mr.folds.empty()) {
      json folds = json::array();
      for (const FoldMetrics& fm : mr.folds) {
        json f;
        f["fold"] = fm.fold;
        f["confusion"] = confusion_to_json(fm.prf.confusion);
        f["per_class"] = per_class_to_json(fm.prf.per_class);
        f["aggregate"] = aggregate_to_json(fm.aggregate);
        folds.push_back(std::move(f));
      }
      m["folds"] = std::move(folds);
    }
    if (!mr.per_unit.empty()) {
      json units = json::array();
      for (const UnitMetrics& um : mr.per_unit) {
        json u;
        u["park"] = um.unit.park;
        u["unit"] = um.unit.unit;
        u["confusion"] = confusion_to_json(um.prf.confusion);
        u["per_class"] = per_class_to_json(um.prf.per_class);
        u["aggregate"] = aggregate_to_json(um.aggregate);
        units.push_back(std::move(u));
      }
      m["per_turbine"] = std::move(units);
    }
    models.push_back(std::move(m));
  }
  j["models"] = std::move(models);
  return j.dump(2) + "\n";
}

std::string report_markdown_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
    const double beta = j.at("beta").get<double>();
    const std::string fb = "F_" + format_double(beta);
    std::string md = "# Evaluation Report\n\n";
    md += "- mode: " + j.at("mode").get<std::string>() + "\n";
    md += "- beta: " + format_double(beta) + "\n";
    if (j.at("mode").get<std::string>() == "cv") {
      md += "- folds: " + format_int(j.at("k_folds").get<std::int64_t>()) + " (" +
            j.at("fold_mode").get<std::string>() + ")\n";
    }
    md += "- averaging: " + j.at("averaging").get<std::string>() + "\n";
    md += "- seed: " + std::to_string(j.at("seed").get<std::uint64_t>()) + "\n\n";

    md += "| Method | " + fb + " | F_1 | Precision | Recall |\n";
    md += "|---|---:|---:|---:|---:|\n";
    for (const json& m : j.at("models")) {
      const json& agg = m.at("aggregate");
      md += "| " + md_escape(m.at("model").get<std::string>()) + " | " +
            fmt4(metric_or_zero(agg, "f_beta")) + " | " + fmt4(metric_or_zero(agg, "f1")) +
            " | " + fmt4(metric_or_zero(agg, "precision")) + " | " +
            fmt4(metric_or_zero(agg, "recall")) + " |\n";
    }
    md += "\n";

    for (const json& m : j.at("models")) {
      md += "## " + md_escape(m.at("model").get<std::string>()) + "\n\n";
      append_metrics_table(md, m, beta);
      md += "\nConfusion matrix (rows are true classes):\n\n";
      append_confusion_table(md, m.at("confusion"));
      if (m.contains("per_turbine")) {
        md += "\nPer-turbine " + fb + ":\n\n";
        md += "| Turbine | " + fb + " | F_1 | Precision | Recall |\n";
        md += "|---|---:|---:|---:|---:|\n";
        for (const json& u : m.at("per_turbine")) {
          const json& agg = u.at("aggregate");
          md += "| " + md_escape(u.at("park").get<std::string>()) + "/" +
                md_escape(u.at("unit").get<std::string>()) + " | " +
                fmt4(metric_or_zero(agg, "f_beta")) + " | " +
                fmt4(metric_or_zero(agg, "f1")) + " | " +
                fmt4(metric_or_zero(agg, "precision")) + " | " +
                fmt4(metric_or_zero(agg, "recall")) + " |\n";
        }
      }
      md += "\n";
    }
    return md;
  } catch (const json::exception& e) {
    throw IoError(std::string("invalid report JSON: ") + e.what());
  }
}

}  // namespace fdx
