#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support/test_support.hpp"
#include "vlmedge/common/base64.hpp"
#include "vlmedge/common/image.hpp"
#include "vlmedge/dataset/dataset.hpp"
#include "vlmedge/dataset/synthetic.hpp"

namespace vlmedge::dataset {
namespace {

namespace fs = std::filesystem;

std::string tiny_b64() {
  imaging::RgbImage image{4, 4, std::vector<std::uint8_t>(48, 200)};
  return base64_encode(imaging::encode_jpeg(image, 80));
}

std::string line(const std::string& id, const std::string& extra = "") {
  return R"({"id":")" + id + R"(","question":"Is it red?","qtype":"yes_no","gold":"yes","image_b64":")" +
         tiny_b64() + "\"" + extra + "}";
}

DatasetError load_error(const std::string& content, const fs::path& base = ".") {
  try {
    parse_dataset(content, base);
  } catch (const DatasetError& e) {
    return e;
  }
  ADD_FAILURE() << "expected a DatasetError";
  return DatasetError(DatasetErrc::IoError, "none");
}

TEST(Dataset, ThreeLinesGiveThreeItems) {
  const auto m = parse_dataset(line("a") + "\n" + line("b") + "\n\n" + line("c") + "\n", ".", "tiny");
  ASSERT_EQ(m.items.size(), 3u);
  EXPECT_EQ(m.name, "tiny");
  EXPECT_EQ(m.schema, Schema::Robo2Vlm);
  EXPECT_EQ(m.items[1].id, "b");
  EXPECT_EQ(m.find("c")->gold, "yes");
  EXPECT_EQ(m.find("zzz"), nullptr);
}

TEST(Dataset, HeaderLineSetsNameAndSchema) {
  const auto m = parse_dataset(
      R"({"dataset":"hri","schema":"robot_collected"})" "\n" +
          line("a", R"(,"category":"gesture_recognition")"),
      ".");
  EXPECT_EQ(m.name, "hri");
  EXPECT_EQ(m.schema, Schema::RobotCollected);
  EXPECT_EQ(m.items[0].category, "gesture_recognition");
}

TEST(Dataset, BadLinesReportedWithLineNumbers) {
  const auto e = load_error(line("a") + "\n{not json\n" + line("c", R"(,"qtype":"essay")") + "\n");
  EXPECT_EQ(e.code(), DatasetErrc::SchemaError);
  ASSERT_EQ(e.errors().size(), 2u);
  EXPECT_EQ(e.errors()[0].line, 2u);
  EXPECT_EQ(e.errors()[1].line, 3u);
}

TEST(Dataset, DuplicateIdsRejected) {
  const auto e = load_error(line("a") + "\n" + line("a") + "\n");
  EXPECT_EQ(e.code(), DatasetErrc::DuplicateId);
  ASSERT_EQ(e.errors().size(), 1u);
  EXPECT_EQ(e.errors()[0].line, 2u);
}

TEST(Dataset, MultipleChoiceValidation) {
  const std::string mc_ok =
      R"({"id":"m","question":"Which?","qtype":"multiple_choice","choices":["red","blue"],"gold":"blue","image_b64":")" +
      tiny_b64() + "\"}";
  EXPECT_EQ(parse_dataset(mc_ok, ".").items[0].choices.size(), 2u);
  const std::string gold_missing =
      R"({"id":"m","question":"Which?","qtype":"multiple_choice","choices":["red","blue"],"gold":"green","image_b64":")" +
      tiny_b64() + "\"}";
  EXPECT_EQ(load_error(gold_missing).code(), DatasetErrc::SchemaError);
  const std::string one_choice =
      R"({"id":"m","question":"Which?","qtype":"multiple_choice","choices":["red"],"gold":"red","image_b64":")" +
      tiny_b64() + "\"}";
  EXPECT_EQ(load_error(one_choice).code(), DatasetErrc::SchemaError);
}

TEST(Dataset, RobotCollectedNeedsKnownCategory) {
  const std::string header = R"({"dataset":"hri","schema":"robot_collected"})" "\n";
  EXPECT_EQ(load_error(header + line("a")).code(), DatasetErrc::SchemaError);
  EXPECT_EQ(load_error(header + line("a", R"(,"category":"cooking")")).code(), DatasetErrc::SchemaError);
}

TEST(Dataset, ImageMustExistOrBeInline) {
  EXPECT_EQ(load_error(R"({"id":"a","question":"q","qtype":"yes_no","gold":"yes","image":"nope.jpg"})").code(),
            DatasetErrc::SchemaError);
  EXPECT_EQ(load_error(R"({"id":"a","question":"q","qtype":"yes_no","gold":"yes"})").code(),
            DatasetErrc::SchemaError);
  EXPECT_EQ(load_error(R"({"id":"a","question":"q","qtype":"yes_no","gold":"yes","image_b64":"%%%"})").code(),
            DatasetErrc::SchemaError);
}

TEST(Dataset, MissingFileIsIoError) {
  try {
    load_dataset("/nonexistent/data.jsonl");
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.code(), DatasetErrc::IoError);
  }
}

TEST(Dataset, EmitLoadRoundTrip) {
  const auto fixture = load_dataset(test::fixture_dir() / "hri20" / "hri20.jsonl");
  ASSERT_EQ(fixture.items.size(), 20u);
  EXPECT_EQ(fixture.name, "hri20");
  test::TempDir dir;
  fs::create_directories(dir / "images");
  for (const auto& item : fixture.items) {
    fs::copy_file(fixture.base_dir / *item.image_path, dir / *item.image_path);
  }
  write_dataset(fixture, dir / "copy.jsonl");
  EXPECT_EQ(load_dataset(dir / "copy.jsonl"), fixture);
  EXPECT_EQ(parse_dataset(emit_dataset(fixture), fixture.base_dir), fixture);
}

TEST(Dataset, SplitByCategory) {
  const auto fixture = load_dataset(test::fixture_dir() / "hri20" / "hri20.jsonl");
  const auto groups = split_by_category(fixture);
  EXPECT_EQ(groups.size(), kHriCategories.size());
  std::size_t total = 0;
  for (const auto& [name, items] : groups) {
    EXPECT_TRUE(is_hri_category(name));
    total += items.size();
  }
  EXPECT_EQ(total, 20u);

  DatasetManifest r2v;
  try {
    split_by_category(r2v);
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.code(), DatasetErrc::WrongSchema);
  }
}

TEST(Dataset, QueriesCarryBenchmarkMetadata) {
  const auto fixture = load_dataset(test::fixture_dir() / "hri20" / "hri20.jsonl");
  const auto& item = fixture.items[0];
  const auto q = make_query(item, fixture.schema, "q-000001");
  EXPECT_EQ(q.query_id, "q-000001");
  EXPECT_EQ(q.text, item.question);
  EXPECT_EQ(q.item_id, item.id);
  EXPECT_EQ(q.schema, "robot_collected");
  EXPECT_EQ(q.category, item.category);
  EXPECT_FALSE(q.frame_ref.has_value());
  EXPECT_EQ(make_answer_table(fixture).at(item.id), item.gold);
  EXPECT_FALSE(load_image_bytes(item, fixture.base_dir).empty());
}

TEST(Synthetic, DeterministicAndValid) {
  test::TempDir a;
  test::TempDir b;
  const SyntheticOptions options{.name = "syn", .schema = Schema::RobotCollected, .count = 15, .seed = 9};
  const auto m1 = generate_synthetic(options, a.path());
  const auto m2 = generate_synthetic(options, b.path());
  EXPECT_EQ(m1, m2);
  ASSERT_EQ(m1.items.size(), 15u);
  auto read = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  EXPECT_EQ(read(a / "syn.jsonl"), read(b / "syn.jsonl"));
  EXPECT_EQ(read(a / "images" / "rc-0003.jpg"), read(b / "images" / "rc-0003.jpg"));
  EXPECT_EQ(load_dataset(a / "syn.jsonl"), m1);
  EXPECT_EQ(split_by_category(m1).size(), 5u);
}

TEST(Synthetic, InlineImagesAndSeedsDiffer) {
  test::TempDir dir;
  const auto m = generate_synthetic({.name = "x", .count = 6, .seed = 1, .inline_images = true}, dir.path());
  for (const auto& item : m.items) {
    EXPECT_TRUE(item.image_b64.has_value());
    EXPECT_FALSE(item.image_path.has_value());
    const auto image = imaging::decode_image(load_image_bytes(item, m.base_dir));
    EXPECT_EQ(image.width, 96);
  }
  test::TempDir other;
  const auto m2 = generate_synthetic({.name = "x", .count = 6, .seed = 2, .inline_images = true}, other.path());
  EXPECT_NE(m, m2);
}

}  // namespace
}  // namespace vlmedge::dataset
