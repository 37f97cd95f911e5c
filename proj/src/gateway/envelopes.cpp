#include "vlmedge/gateway/envelopes.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace vlmedge::gateway {

using nlohmann::json;

std::string_view to_string(GatewayErrc code) {
  switch (code) {
    case GatewayErrc::NoFrameAvailable: return "NoFrameAvailable";
    case GatewayErrc::BackendUnavailable: return "BackendUnavailable";
    case GatewayErrc::BackendTimeout: return "BackendTimeout";
    case GatewayErrc::MalformedQuery: return "MalformedQuery";
    case GatewayErrc::UnknownProfile: return "UnknownProfile";
    case GatewayErrc::ImageDecodeError: return "ImageDecodeError";
    case GatewayErrc::BackendError: return "BackendError";
  }
  return "Unknown";
}

namespace {

constexpr std::array<std::pair<QType, std::string_view>, 3> kQTypes{{
    {QType::YesNo, "yes_no"},
    {QType::MultipleChoice, "multiple_choice"},
    {QType::FreeForm, "free_form"},
}};

[[noreturn]] void malformed(const std::string& why) {
  throw GatewayError(GatewayErrc::MalformedQuery, why);
}

template <typename T>
std::optional<T> optional_field(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace

std::string_view to_string(QType type) {
  for (const auto& [t, name] : kQTypes) {
    if (t == type) return name;
  }
  return "free_form";
}

std::optional<QType> parse_qtype(std::string_view text) {
  for (const auto& [t, name] : kQTypes) {
    if (name == text) return t;
  }
  return std::nullopt;
}

void validate(const QueryEnvelope& query) {
  if (query.text.empty()) malformed("query text is empty");
  if (query.qtype == QType::MultipleChoice) {
    if (query.choices.size() < 2 || query.choices.size() > 8) {
      malformed("multiple_choice needs 2 to 8 choices, got " + std::to_string(query.choices.size()));
    }
  } else if (!query.choices.empty()) {
    malformed("choices are only allowed for multiple_choice");
  }
}

QueryEnvelope query_from_json(const json& body) {
  if (!body.is_object()) malformed("query must be a JSON object");
  QueryEnvelope q;
  try {
    q.query_id = body.value("query_id", body.value("id", std::string()));
    q.session_id = body.value("session_id", std::string());
    q.text = body.value("text", std::string());
    const auto qtype = body.value("qtype", std::string("free_form"));
    auto parsed = parse_qtype(qtype);
    if (!parsed) malformed("unknown qtype '" + qtype + "'");
    q.qtype = *parsed;
    if (auto it = body.find("choices"); it != body.end() && !it->is_null()) {
      q.choices = it->get<std::vector<std::string>>();
    }
    if (auto it = body.find("frame_ref"); it != body.end() && !it->is_null()) {
      if (it->is_string()) {
        if (it->get<std::string>() != "latest") malformed("frame_ref must be a frame id or \"latest\"");
      } else if (it->is_number_integer()) {
        const auto id = it->get<std::int64_t>();
        if (id < 0 || id > 0xFFFFFFFF) malformed("frame_ref out of range");
        q.frame_ref = static_cast<std::uint32_t>(id);
      } else {
        malformed("frame_ref must be a frame id or \"latest\"");
      }
    }
    q.category = optional_field<std::string>(body, "category");
    q.issued_ts_us = body.value("issued_ts", std::int64_t{0});
    q.item_id = optional_field<std::string>(body, "item_id");
    q.schema = optional_field<std::string>(body, "schema");
  } catch (const json::exception& e) {
    malformed(e.what());
  }
  if (q.query_id.empty()) malformed("query_id is missing");
  validate(q);
  return q;
}

json to_json(const QueryEnvelope& q) {
  json j{{"type", "query"},
         {"query_id", q.query_id},
         {"session_id", q.session_id},
         {"text", q.text},
         {"qtype", to_string(q.qtype)},
         {"issued_ts", q.issued_ts_us}};
  if (!q.choices.empty()) j["choices"] = q.choices;
  j["frame_ref"] = q.frame_ref ? json(*q.frame_ref) : json("latest");
  if (q.category) j["category"] = *q.category;
  if (q.item_id) j["item_id"] = *q.item_id;
  if (q.schema) j["schema"] = *q.schema;
  return j;
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Preprocess: return "preprocess";
    case Stage::Fusion: return "fusion";
    case Stage::Generation: return "generation";
    case Stage::TextDecode: return "text_decode";
  }
  return "unknown";
}

std::int64_t& StageDurations::operator[](Stage stage) {
  switch (stage) {
    case Stage::Preprocess: return preprocess_us;
    case Stage::Fusion: return fusion_us;
    case Stage::Generation: return generation_us;
    case Stage::TextDecode: break;
  }
  return text_decode_us;
}

std::int64_t StageDurations::operator[](Stage stage) const {
  return const_cast<StageDurations&>(*this)[stage];
}

bool LatencyTrace::monotonic() const {
  const std::array<std::int64_t, 8> ts{capture_ts,     tx_start_ts,        rx_gateway_ts,
                                       preprocess_done_ts, fusion_done_ts, generation_done_ts,
                                       decode_done_ts, response_received_ts};
  return std::is_sorted(ts.begin(), ts.end());
}

StageDurations LatencyTrace::inference() const {
  return {d_preprocess_us(), d_fusion_us(), d_generation_us(), d_text_decode_us()};
}

namespace {

double ms(std::int64_t us) { return static_cast<double>(us) / 1000.0; }

}  // namespace

json to_json(const LatencyTrace& t) {
  return {{"capture_ts", t.capture_ts},
          {"tx_start_ts", t.tx_start_ts},
          {"rx_gateway_ts", t.rx_gateway_ts},
          {"preprocess_done_ts", t.preprocess_done_ts},
          {"fusion_done_ts", t.fusion_done_ts},
          {"generation_done_ts", t.generation_done_ts},
          {"decode_done_ts", t.decode_done_ts},
          {"response_received_ts", t.response_received_ts},
          {"d_network_up", ms(t.d_network_up_us())},
          {"d_preprocess", ms(t.d_preprocess_us())},
          {"d_fusion", ms(t.d_fusion_us())},
          {"d_generation", ms(t.d_generation_us())},
          {"d_text_decode", ms(t.d_text_decode_us())},
          {"d_network_down", ms(t.d_network_down_us())},
          {"e2e_ms", t.e2e_ms()}};
}

LatencyTrace trace_from_json(const json& j) {
  LatencyTrace t;
  t.capture_ts = j.value("capture_ts", std::int64_t{0});
  t.tx_start_ts = j.value("tx_start_ts", std::int64_t{0});
  t.rx_gateway_ts = j.value("rx_gateway_ts", std::int64_t{0});
  t.preprocess_done_ts = j.value("preprocess_done_ts", std::int64_t{0});
  t.fusion_done_ts = j.value("fusion_done_ts", std::int64_t{0});
  t.generation_done_ts = j.value("generation_done_ts", std::int64_t{0});
  t.decode_done_ts = j.value("decode_done_ts", std::int64_t{0});
  t.response_received_ts = j.value("response_received_ts", std::int64_t{0});
  return t;
}

json to_json(const SimulatedDurations& s) {
  return {{"network_up_us", s.network_up_us},
          {"preprocess_us", s.stages.preprocess_us},
          {"fusion_us", s.stages.fusion_us},
          {"generation_us", s.stages.generation_us},
          {"text_decode_us", s.stages.text_decode_us},
          {"network_down_us", s.network_down_us},
          {"e2e_ms", s.e2e_ms()}};
}

SimulatedDurations simulated_from_json(const json& j) {
  SimulatedDurations s;
  s.network_up_us = j.at("network_up_us").get<std::int64_t>();
  s.stages.preprocess_us = j.at("preprocess_us").get<std::int64_t>();
  s.stages.fusion_us = j.at("fusion_us").get<std::int64_t>();
  s.stages.generation_us = j.at("generation_us").get<std::int64_t>();
  s.stages.text_decode_us = j.at("text_decode_us").get<std::int64_t>();
  s.network_down_us = j.at("network_down_us").get<std::int64_t>();
  return s;
}

json to_json(const AnswerEnvelope& a) {
  json j{{"type", "answer"},
         {"query_id", a.query_id},
         {"text", a.text},
         {"backend_id", a.backend_id},
         {"token_count", a.token_count},
         {"trace", to_json(a.trace)}};
  if (a.simulated) j["simulated"] = to_json(*a.simulated);
  if (a.frame_id) j["frame_id"] = *a.frame_id;
  if (a.item_id) j["item_id"] = *a.item_id;
  if (a.error) j["error"] = {{"code", a.error->code}, {"message", a.error->message}};
  return j;
}

AnswerEnvelope answer_from_json(const json& j) {
  AnswerEnvelope a;
  a.query_id = j.at("query_id").get<std::string>();
  a.text = j.value("text", std::string());
  a.backend_id = j.value("backend_id", std::string());
  a.token_count = j.value("token_count", 0);
  if (auto it = j.find("trace"); it != j.end()) a.trace = trace_from_json(*it);
  if (auto it = j.find("simulated"); it != j.end() && !it->is_null()) a.simulated = simulated_from_json(*it);
  a.frame_id = optional_field<std::uint32_t>(j, "frame_id");
  a.item_id = optional_field<std::string>(j, "item_id");
  if (auto it = j.find("error"); it != j.end() && !it->is_null()) {
    a.error = AnswerError{it->value("code", std::string()), it->value("message", std::string())};
  }
  return a;
}

int count_tokens(std::string_view text, int max_tokens) {
  int count = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return std::min(count, max_tokens);
}

}  // namespace vlmedge::gateway
