#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vlmedge/common/error.hpp"
#include "vlmedge/gateway/envelopes.hpp"

namespace vlmedge::dataset {

enum class DatasetErrc { IoError, SchemaError, DuplicateId, WrongSchema };

std::string_view to_string(DatasetErrc code);

struct LineError {
  std::size_t line = 0;
  DatasetErrc code = DatasetErrc::SchemaError;
  std::string reason;
};

/// Load failure. For validation failures `errors` holds one entry per bad
/// line; the exception code is SchemaError if any line had a schema error,
/// else DuplicateId.
class DatasetError : public CodedError<DatasetErrc> {
 public:
  DatasetError(DatasetErrc code, const std::string& message, std::vector<LineError> errors = {})
      : CodedError(code, message), errors_(std::move(errors)) {}

  const std::vector<LineError>& errors() const { return errors_; }

 private:
  std::vector<LineError> errors_;
};

enum class Schema { Robo2Vlm, RobotCollected };

std::string_view to_string(Schema schema);
std::optional<Schema> parse_schema(std::string_view text);

inline constexpr std::array<std::string_view, 5> kHriCategories{
    "human_presence_detection", "instruction_following", "spatial_relations", "social_navigation",
    "gesture_recognition"};

bool is_hri_category(std::string_view category);

struct DatasetItem {
  std::string id;
  /// Exactly one of image_path (relative to the manifest) and image_b64 is set.
  std::optional<std::string> image_path;
  std::optional<std::string> image_b64;
  std::string question;
  gateway::QType qtype = gateway::QType::FreeForm;
  std::vector<std::string> choices;
  std::string gold;
  std::optional<std::string> category;

  bool operator==(const DatasetItem&) const = default;
};

struct DatasetManifest {
  std::string name;
  Schema schema = Schema::Robo2Vlm;
  std::vector<DatasetItem> items;
  /// Directory image paths resolve against. Not serialized.
  std::filesystem::path base_dir;

  const DatasetItem* find(std::string_view id) const;
  bool operator==(const DatasetManifest& other) const {
    return name == other.name && schema == other.schema && items == other.items;
  }
};

/// Parses JSONL. An optional first line {"dataset": name, "schema": ...}
/// names the set; without it the schema defaults to robo2vlm and the name to
/// `default_name`. Validation is fail-closed: any bad line loads nothing.
DatasetManifest parse_dataset(std::string_view content, const std::filesystem::path& base_dir,
                              const std::string& default_name = "dataset");

/// Throws DatasetError{IoError} if the file cannot be read.
DatasetManifest load_dataset(const std::filesystem::path& path);

/// Serializes to JSONL with a header line. load(emit(m)) == m.
std::string emit_dataset(const DatasetManifest& manifest);
void write_dataset(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Throws WrongSchema unless the manifest is robot_collected.
std::map<std::string, std::vector<DatasetItem>> split_by_category(const DatasetManifest& manifest);

using AnswerTable = std::map<std::string, std::string>;
AnswerTable make_answer_table(const DatasetManifest& manifest);

/// Image bytes for an item. Throws DatasetError{IoError}.
std::vector<std::uint8_t> load_image_bytes(const DatasetItem& item, const std::filesystem::path& base_dir);

/// The query a robot would send for this item (frame_ref left as latest).
gateway::QueryEnvelope make_query(const DatasetItem& item, Schema schema, const std::string& query_id);

}  // namespace vlmedge::dataset
