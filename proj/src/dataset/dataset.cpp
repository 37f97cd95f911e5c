#include "vlmedge/dataset/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vlmedge/common/base64.hpp"

namespace vlmedge::dataset {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(DatasetErrc code) {
  switch (code) {
    case DatasetErrc::IoError: return "IoError";
    case DatasetErrc::SchemaError: return "SchemaError";
    case DatasetErrc::DuplicateId: return "DuplicateId";
    case DatasetErrc::WrongSchema: return "WrongSchema";
  }
  return "Unknown";
}

std::string_view to_string(Schema schema) {
  return schema == Schema::RobotCollected ? "robot_collected" : "robo2vlm";
}

std::optional<Schema> parse_schema(std::string_view text) {
  if (text == "robo2vlm") return Schema::Robo2Vlm;
  if (text == "robot_collected") return Schema::RobotCollected;
  return std::nullopt;
}

bool is_hri_category(std::string_view category) {
  return std::find(kHriCategories.begin(), kHriCategories.end(), category) != kHriCategories.end();
}

const DatasetItem* DatasetManifest::find(std::string_view id) const {
  for (const auto& item : items) {
    if (item.id == id) return &item;
  }
  return nullptr;
}

namespace {

struct BadLine {
  std::string reason;
};

std::string require_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw BadLine{std::string("missing \"") + key + "\""};
  if (!it->is_string()) throw BadLine{std::string("\"") + key + "\" must be a string"};
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw BadLine{std::string("\"") + key + "\" must be a string"};
  return it->get<std::string>();
}

DatasetItem parse_item(const json& j, Schema schema, const fs::path& base_dir) {
  if (!j.is_object()) throw BadLine{"item must be a JSON object"};
  DatasetItem item;
  item.id = require_string(j, "id");
  if (item.id.empty()) throw BadLine{"\"id\" is empty"};
  item.question = require_string(j, "question");
  if (item.question.empty()) throw BadLine{"\"question\" is empty"};
  item.gold = require_string(j, "gold");
  const auto qtype = require_string(j, "qtype");
  auto parsed = gateway::parse_qtype(qtype);
  if (!parsed) throw BadLine{"unknown qtype '" + qtype + "'"};
  item.qtype = *parsed;

  if (auto it = j.find("choices"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw BadLine{"\"choices\" must be an array"};
    for (const auto& c : *it) {
      if (!c.is_string()) throw BadLine{"choices must be strings"};
      item.choices.push_back(c.get<std::string>());
    }
  }
  if (item.qtype == gateway::QType::MultipleChoice) {
    if (item.choices.size() < 2 || item.choices.size() > 8) {
      throw BadLine{"multiple_choice needs 2 to 8 choices"};
    }
    if (std::set<std::string>(item.choices.begin(), item.choices.end()).size() != item.choices.size()) {
      throw BadLine{"choices must be distinct"};
    }
    if (std::find(item.choices.begin(), item.choices.end(), item.gold) == item.choices.end()) {
      throw BadLine{"gold '" + item.gold + "' is not one of the choices"};
    }
  } else if (!item.choices.empty()) {
    throw BadLine{"choices are only allowed for multiple_choice"};
  }

  item.category = optional_string(j, "category");
  if (schema == Schema::RobotCollected) {
    if (!item.category) throw BadLine{"robot_collected items need a category"};
    if (!is_hri_category(*item.category)) throw BadLine{"unknown category '" + *item.category + "'"};
  }

  item.image_path = optional_string(j, "image");
  item.image_b64 = optional_string(j, "image_b64");
  if (item.image_path.has_value() == item.image_b64.has_value()) {
    throw BadLine{"exactly one of \"image\" and \"image_b64\" is required"};
  }
  if (item.image_path) {
    std::error_code ec;
    if (!fs::is_regular_file(base_dir / *item.image_path, ec)) {
      throw BadLine{"image '" + *item.image_path + "' not found"};
    }
  } else if (!base64_decode(*item.image_b64)) {
    throw BadLine{"\"image_b64\" is not valid base64"};
  }
  return item;
}

}  // namespace

DatasetManifest parse_dataset(std::string_view content, const fs::path& base_dir,
                              const std::string& default_name) {
  DatasetManifest manifest;
  manifest.name = default_name;
  manifest.base_dir = base_dir;

  std::vector<LineError> errors;
  std::set<std::string> seen;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw BadLine{std::string("invalid JSON: ") + e.what()};
      }
      if (first && j.is_object() && j.contains("dataset") && !j.contains("id")) {
        first = false;
        manifest.name = require_string(j, "dataset");
        const auto schema = require_string(j, "schema");
        auto parsed = parse_schema(schema);
        if (!parsed) throw BadLine{"unknown schema '" + schema + "'"};
        manifest.schema = *parsed;
        continue;
      }
      first = false;
      auto item = parse_item(j, manifest.schema, base_dir);
      if (!seen.insert(item.id).second) {
        errors.push_back({line_no, DatasetErrc::DuplicateId, "duplicate id '" + item.id + "'"});
        continue;
      }
      manifest.items.push_back(std::move(item));
    } catch (const BadLine& bad) {
      first = false;
      errors.push_back({line_no, DatasetErrc::SchemaError, bad.reason});
    }
  }

  if (!errors.empty()) {
    const bool any_schema = std::any_of(errors.begin(), errors.end(), [](const LineError& e) {
      return e.code == DatasetErrc::SchemaError;
    });
    std::ostringstream message;
    message << errors.size() << " invalid line(s)";
    for (const auto& e : errors) message << "\n  line " << e.line << ": " << e.reason;
    throw DatasetError(any_schema ? DatasetErrc::SchemaError : DatasetErrc::DuplicateId, message.str(),
                       std::move(errors));
  }
  return manifest;
}

DatasetManifest load_dataset(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(DatasetErrc::IoError, "cannot read dataset " + path.string());
  std::ostringstream content;
  content << in.rdbuf();
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  return parse_dataset(content.str(), base, path.stem().string());
}

std::string emit_dataset(const DatasetManifest& manifest) {
  std::string out = json{{"dataset", manifest.name}, {"schema", to_string(manifest.schema)}}.dump();
  out += '\n';
  for (const auto& item : manifest.items) {
    json j{{"id", item.id}, {"question", item.question}, {"qtype", gateway::to_string(item.qtype)}};
    if (!item.choices.empty()) j["choices"] = item.choices;
    j["gold"] = item.gold;
    if (item.category) j["category"] = *item.category;
    if (item.image_path) j["image"] = *item.image_path;
    if (item.image_b64) j["image_b64"] = *item.image_b64;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_dataset(const DatasetManifest& manifest, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError(DatasetErrc::IoError, "cannot write " + path.string());
  out << emit_dataset(manifest);
  if (!out) throw DatasetError(DatasetErrc::IoError, "write failed for " + path.string());
}

std::map<std::string, std::vector<DatasetItem>> split_by_category(const DatasetManifest& manifest) {
  if (manifest.schema != Schema::RobotCollected) {
    throw DatasetError(DatasetErrc::WrongSchema, "split_by_category needs a robot_collected dataset");
  }
  std::map<std::string, std::vector<DatasetItem>> groups;
  for (const auto& item : manifest.items) groups[item.category.value_or("")].push_back(item);
  return groups;
}

AnswerTable make_answer_table(const DatasetManifest& manifest) {
  AnswerTable table;
  for (const auto& item : manifest.items) table.emplace(item.id, item.gold);
  return table;
}

std::vector<std::uint8_t> load_image_bytes(const DatasetItem& item, const fs::path& base_dir) {
  if (item.image_b64) {
    auto bytes = base64_decode(*item.image_b64);
    if (!bytes) throw DatasetError(DatasetErrc::IoError, "item " + item.id + ": bad image_b64");
    return *bytes;
  }
  const fs::path path = base_dir / item.image_path.value_or("");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(DatasetErrc::IoError, "item " + item.id + ": cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

gateway::QueryEnvelope make_query(const DatasetItem& item, Schema schema, const std::string& query_id) {
  gateway::QueryEnvelope q;
  q.query_id = query_id;
  q.text = item.question;
  q.qtype = item.qtype;
  q.choices = item.choices;
  q.category = item.category;
  q.item_id = item.id;
  q.schema = std::string(to_string(schema));
  return q;
}

}  // namespace vlmedge::dataset
