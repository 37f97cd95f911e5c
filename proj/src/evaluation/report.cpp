#include "vlmedge/evaluation/report.hpp"

#include <cstdio>
#include <fstream>

namespace vlmedge::evaluation {

using nlohmann::json;

std::string_view to_string(ReportFormat format) {
  switch (format) {
    case ReportFormat::Json: return "json";
    case ReportFormat::Csv: return "csv";
    case ReportFormat::Markdown: return "md";
  }
  return "json";
}

std::optional<ReportFormat> parse_report_format(std::string_view text) {
  if (text == "json") return ReportFormat::Json;
  if (text == "csv") return ReportFormat::Csv;
  if (text == "md" || text == "markdown") return ReportFormat::Markdown;
  return std::nullopt;
}

std::string_view extension(ReportFormat format) { return to_string(format); }

json to_json(const LatencyStats& s) {
  return {{"mean_ms", s.mean_ms}, {"p50_ms", s.p50_ms}, {"p95_ms", s.p95_ms},
          {"min_ms", s.min_ms},   {"max_ms", s.max_ms}, {"count", s.count}};
}

namespace {

LatencyStats latency_from_json(const json& j) {
  LatencyStats s;
  s.mean_ms = j.at("mean_ms").get<double>();
  s.p50_ms = j.at("p50_ms").get<double>();
  s.p95_ms = j.at("p95_ms").get<double>();
  s.min_ms = j.at("min_ms").get<double>();
  s.max_ms = j.at("max_ms").get<double>();
  s.count = j.value("count", std::size_t{0});
  return s;
}

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

std::string sci(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4e", value);
  return buf;
}

}  // namespace

json to_json(const ScoreReport& r) {
  json categories = json::object();
  for (const auto& [name, c] : r.per_category) {
    categories[name] = {{"n_items", c.n_items},
                        {"n_correct", c.n_correct},
                        {"accuracy", c.accuracy},
                        {"mean_e2e_ms", c.mean_e2e_ms}};
  }
  return {{"deployment", r.deployment},
          {"profile", r.profile},
          {"family", r.family},
          {"dataset", r.dataset},
          {"n_items", r.n_items},
          {"n_correct", r.n_correct},
          {"n_errors", r.n_errors},
          {"accuracy", r.accuracy},
          {"per_category", categories},
          {"latency", to_json(r.latency)},
          {"stage_shares", r.stage_shares},
          {"accuracy_per_ms", r.accuracy_per_ms}};
}

ScoreReport score_report_from_json(const json& j) {
  ScoreReport r;
  r.deployment = j.at("deployment").get<std::string>();
  r.profile = j.at("profile").get<std::string>();
  r.family = j.value("family", std::string());
  r.dataset = j.value("dataset", std::string());
  r.n_items = j.at("n_items").get<std::size_t>();
  r.n_correct = j.at("n_correct").get<std::size_t>();
  r.n_errors = j.value("n_errors", std::size_t{0});
  r.accuracy = j.at("accuracy").get<double>();
  for (const auto& [name, c] : j.at("per_category").items()) {
    r.per_category[name] = {c.at("n_items").get<std::size_t>(), c.at("n_correct").get<std::size_t>(),
                            c.at("accuracy").get<double>(), c.at("mean_e2e_ms").get<double>()};
  }
  r.latency = latency_from_json(j.at("latency"));
  r.stage_shares = j.at("stage_shares").get<std::map<std::string, double>>();
  r.accuracy_per_ms = j.at("accuracy_per_ms").get<double>();
  return r;
}

json to_json(const ComparisonReport& c) {
  return {{"edge_profile", c.edge_profile},
          {"cloud_profile", c.cloud_profile},
          {"dataset", c.dataset},
          {"edge_mean_ms", c.edge_mean_ms},
          {"cloud_mean_ms", c.cloud_mean_ms},
          {"latency_reduction_pct", c.latency_reduction_pct},
          {"accuracy_delta", c.accuracy_delta},
          {"winner_per_metric", c.winner_per_metric}};
}

ComparisonReport comparison_from_json(const json& j) {
  ComparisonReport c;
  c.edge_profile = j.at("edge_profile").get<std::string>();
  c.cloud_profile = j.at("cloud_profile").get<std::string>();
  c.dataset = j.value("dataset", std::string());
  c.edge_mean_ms = j.at("edge_mean_ms").get<double>();
  c.cloud_mean_ms = j.at("cloud_mean_ms").get<double>();
  c.latency_reduction_pct = j.at("latency_reduction_pct").get<double>();
  c.accuracy_delta = j.at("accuracy_delta").get<double>();
  c.winner_per_metric = j.at("winner_per_metric").get<std::map<std::string, std::string>>();
  return c;
}

std::string render_csv(const ScoreReport& r) {
  std::string out = "deployment,profile,category,n_items,n_correct,accuracy,mean_e2e_ms\n";
  for (const auto& [name, c] : r.per_category) {
    out += r.deployment + "," + r.profile + "," + name + "," + std::to_string(c.n_items) + "," +
           std::to_string(c.n_correct) + "," + fixed(c.accuracy, 4) + "," + fixed(c.mean_e2e_ms, 2) + "\n";
  }
  return out;
}

std::string render_markdown(const ScoreReport& r) {
  std::string out = "# " + r.profile + " (" + r.deployment + ") on " + r.dataset + "\n\n";
  out += "| metric | value |\n|---|---|\n";
  out += "| items | " + std::to_string(r.n_items) + " |\n";
  out += "| errors | " + std::to_string(r.n_errors) + " |\n";
  out += "| accuracy | " + fixed(r.accuracy, 4) + " |\n";
  out += "| mean e2e (ms) | " + fixed(r.latency.mean_ms, 2) + " |\n";
  out += "| p50 e2e (ms) | " + fixed(r.latency.p50_ms, 2) + " |\n";
  out += "| p95 e2e (ms) | " + fixed(r.latency.p95_ms, 2) + " |\n";
  out += "| min / max (ms) | " + fixed(r.latency.min_ms, 2) + " / " + fixed(r.latency.max_ms, 2) + " |\n";
  out += "| accuracy per ms | " + sci(r.accuracy_per_ms) + " |\n\n";

  out += "## Per-category accuracy\n\n| category | items | correct | accuracy | mean e2e (ms) |\n|---|---|---|---|---|\n";
  for (const auto& [name, c] : r.per_category) {
    out += "| " + name + " | " + std::to_string(c.n_items) + " | " + std::to_string(c.n_correct) + " | " +
           fixed(c.accuracy, 4) + " | " + fixed(c.mean_e2e_ms, 2) + " |\n";
  }
  out += "\n## Stage shares of inference time\n\n| stage | share |\n|---|---|\n";
  for (const char* stage : {"preprocess", "fusion", "generation", "text_decode"}) {
    auto it = r.stage_shares.find(stage);
    out += std::string("| ") + stage + " | " + fixed(it == r.stage_shares.end() ? 0.0 : it->second, 4) + " |\n";
  }
  return out;
}

std::string render(const ScoreReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Csv: return render_csv(report);
    case ReportFormat::Markdown: return render_markdown(report);
    case ReportFormat::Json: break;
  }
  return to_json(report).dump(2) + "\n";
}

std::string render_markdown(const ComparisonReport& c) {
  std::string out = "# Edge vs cloud: " + c.edge_profile + " / " + c.cloud_profile + "\n\n";
  out += "| metric | value |\n|---|---|\n";
  out += "| edge mean e2e (ms) | " + fixed(c.edge_mean_ms, 2) + " |\n";
  out += "| cloud mean e2e (ms) | " + fixed(c.cloud_mean_ms, 2) + " |\n";
  out += "| latency reduction (%) | " + fixed(c.latency_reduction_pct, 2) + " |\n";
  out += "| accuracy delta | " + fixed(c.accuracy_delta, 4) + " |\n\n";
  out += "| metric | winner |\n|---|---|\n";
  for (const auto& [metric, winner] : c.winner_per_metric) out += "| " + metric + " | " + winner + " |\n";
  return out;
}

void write_text(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw EvaluationError(EvaluationErrc::IoError, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw EvaluationError(EvaluationErrc::IoError, "write failed for " + path.string());
}

void emit_report(const ScoreReport& report, ReportFormat format, const std::filesystem::path& path) {
  write_text(path, render(report, format));
}

}  // namespace vlmedge::evaluation
