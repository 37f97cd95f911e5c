#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "vlmedge/evaluation/scoring.hpp"

namespace vlmedge::evaluation {

enum class ReportFormat { Json, Csv, Markdown };

std::string_view to_string(ReportFormat format);
std::optional<ReportFormat> parse_report_format(std::string_view text);
/// File extension without the dot.
std::string_view extension(ReportFormat format);

nlohmann::json to_json(const ScoreReport& report);
ScoreReport score_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ComparisonReport& report);
ComparisonReport comparison_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LatencyStats& stats);

/// Header plus one row per category.
std::string render_csv(const ScoreReport& report);
/// Summary, a per-category table and a stage-share table.
std::string render_markdown(const ScoreReport& report);
std::string render(const ScoreReport& report, ReportFormat format);
std::string render_markdown(const ComparisonReport& report);

/// Throws EvaluationError{IoError}.
void write_text(const std::filesystem::path& path, std::string_view content);
void emit_report(const ScoreReport& report, ReportFormat format, const std::filesystem::path& path);

}  // namespace vlmedge::evaluation
