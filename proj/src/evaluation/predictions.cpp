#include "vlmedge/evaluation/predictions.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace vlmedge::evaluation {

using nlohmann::json;

json to_json(const Prediction& p) {
  json j{{"id", p.item_id}, {"pred", p.pred}};
  if (!p.query_id.empty()) j["query_id"] = p.query_id;
  if (!p.backend_id.empty()) j["backend"] = p.backend_id;
  if (p.trace) j["trace"] = gateway::to_json(*p.trace);
  if (p.simulated) j["simulated"] = gateway::to_json(*p.simulated);
  j["error"] = p.error ? json{{"code", p.error->code}, {"message", p.error->message}} : json(nullptr);
  return j;
}

Prediction prediction_from_json(const json& body) {
  Prediction p;
  p.item_id = body.at("id").get<std::string>();
  p.pred = body.at("pred").is_null() ? std::string() : body.at("pred").get<std::string>();
  p.query_id = body.value("query_id", "");
  p.backend_id = body.value("backend", "");
  if (auto it = body.find("trace"); it != body.end() && it->is_object()) p.trace = gateway::trace_from_json(*it);
  if (auto it = body.find("simulated"); it != body.end() && it->is_object()) {
    p.simulated = gateway::simulated_from_json(*it);
  }
  if (auto it = body.find("error"); it != body.end() && it->is_object()) {
    p.error = gateway::AnswerError{it->value("code", ""), it->value("message", "")};
  }
  return p;
}

Prediction prediction_from_answer(const std::string& item_id, const gateway::AnswerEnvelope& answer) {
  Prediction p;
  p.item_id = item_id;
  p.pred = answer.text;
  p.query_id = answer.query_id;
  p.backend_id = answer.backend_id;
  p.trace = answer.trace;
  p.simulated = answer.simulated;
  p.error = answer.error;
  return p;
}

std::string emit_predictions(const std::vector<Prediction>& predictions) {
  std::string out;
  for (const auto& p : predictions) {
    out += to_json(p).dump();
    out += '\n';
  }
  return out;
}

void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw EvaluationError(EvaluationErrc::IoError, "cannot write " + path.string());
  out << emit_predictions(predictions);
  if (!out) throw EvaluationError(EvaluationErrc::IoError, "write failed for " + path.string());
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EvaluationError(EvaluationErrc::IoError, "cannot read " + path.string());
  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(prediction_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw EvaluationError(EvaluationErrc::IoError,
                            path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

gateway::SimulatedDurations reported_durations(const Prediction& p) {
  if (p.simulated) return *p.simulated;
  gateway::SimulatedDurations d;
  if (!p.trace) return d;
  d.network_up_us = p.trace->d_network_up_us();
  d.stages = p.trace->inference();
  d.network_down_us = p.trace->d_network_down_us();
  return d;
}

std::vector<ItemOutcome> score_predictions(const std::vector<Prediction>& predictions,
                                           const dataset::DatasetManifest& manifest, const ScoreOptions& options) {
  std::map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions) by_id[p.item_id] = &p;

  std::vector<ItemOutcome> outcomes;
  outcomes.reserve(manifest.items.size());
  for (const auto& item : manifest.items) {
    ItemOutcome o;
    o.item_id = item.id;
    o.category = item.category;
    auto it = by_id.find(item.id);
    if (it == by_id.end() || it->second->error) {
      o.error = true;
    } else {
      o.correct = score_item(it->second->pred, item, options);
      o.simulated = reported_durations(*it->second);
    }
    outcomes.push_back(std::move(o));
  }
  return outcomes;
}

}  // namespace vlmedge::evaluation
