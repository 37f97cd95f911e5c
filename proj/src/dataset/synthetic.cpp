#include "vlmedge/dataset/synthetic.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <random>

#include "vlmedge/common/base64.hpp"
#include "vlmedge/common/image.hpp"
#include "vlmedge/common/rng.hpp"

namespace vlmedge::dataset {

namespace fs = std::filesystem;
using gateway::QType;

namespace {

struct Color {
  const char* name;
  std::uint8_t r, g, b;
};

constexpr std::array<Color, 5> kColors{{
    {"red", 200, 40, 40},
    {"green", 40, 170, 60},
    {"blue", 40, 70, 200},
    {"yellow", 220, 200, 40},
    {"purple", 130, 50, 160},
}};

constexpr Color kSkin{"skin", 224, 172, 140};
constexpr Color kFloor{"floor", 120, 120, 120};
constexpr Color kWall{"wall", 190, 190, 185};
constexpr Color kTrousers{"trousers", 50, 50, 60};

class Canvas {
 public:
  explicit Canvas(int size) : image_{size, size, std::vector<std::uint8_t>(size * size * 3)} {
    fill(0, 0, size, size / 2, kWall);
    fill(0, size / 2, size, size, kFloor);
  }

  // Coordinates are fractions of the image size.
  void rect(double x0, double y0, double x1, double y1, const Color& c) {
    const int s = image_.width;
    fill(static_cast<int>(x0 * s), static_cast<int>(y0 * s), static_cast<int>(x1 * s),
         static_cast<int>(y1 * s), c);
  }

  const imaging::RgbImage& image() const { return image_; }

 private:
  void fill(int x0, int y0, int x1, int y1, const Color& c) {
    for (int y = std::max(0, y0); y < std::min(image_.height, y1); ++y) {
      for (int x = std::max(0, x0); x < std::min(image_.width, x1); ++x) {
        auto* p = &image_.pixels[(y * image_.width + x) * 3];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
      }
    }
  }

  imaging::RgbImage image_;
};

enum class Gesture { Wave, Point, Stop };

void draw_person(Canvas& canvas, double x, Gesture gesture = Gesture::Stop, bool arms = false) {
  canvas.rect(x - 0.04, 0.18, x + 0.04, 0.26, kSkin);
  canvas.rect(x - 0.06, 0.26, x + 0.06, 0.62, kColors[2]);
  canvas.rect(x - 0.05, 0.62, x + 0.05, 0.85, kTrousers);
  if (!arms) return;
  switch (gesture) {
    case Gesture::Wave: canvas.rect(x + 0.06, 0.08, x + 0.10, 0.30, kSkin); break;
    case Gesture::Point: canvas.rect(x + 0.06, 0.30, x + 0.30, 0.34, kSkin); break;
    case Gesture::Stop: canvas.rect(x - 0.02, 0.30, x + 0.02, 0.34, kSkin);
                        canvas.rect(x - 0.05, 0.26, x + 0.05, 0.31, kSkin); break;
  }
}

void draw_box(Canvas& canvas, double x, const Color& c) { canvas.rect(x - 0.08, 0.55, x + 0.08, 0.72, c); }

struct Question {
  std::string text;
  QType qtype;
  std::vector<std::string> choices;
  std::string gold;
};

std::vector<std::string> color_choices(std::mt19937_64& rng, const Color& gold) {
  std::vector<std::string> choices{gold.name};
  std::vector<std::string> others;
  for (const auto& c : kColors) {
    if (c.name != gold.name) others.push_back(c.name);
  }
  std::shuffle(others.begin(), others.end(), rng);
  choices.insert(choices.end(), others.begin(), others.begin() + 3);
  std::shuffle(choices.begin(), choices.end(), rng);
  return choices;
}

std::string yes_no(bool value) { return value ? "yes" : "no"; }

Question robo2vlm_scene(Canvas& canvas, std::mt19937_64& rng) {
  const Color& color = kColors[rng() % kColors.size()];
  const bool left = rng() % 2 == 0;
  const double x = left ? 0.28 : 0.72;
  switch (rng() % 3) {
    case 0:
      draw_box(canvas, x, color);
      return {"What color is the object on the table?", QType::MultipleChoice, color_choices(rng, color),
              color.name};
    case 1:
      draw_box(canvas, x, color);
      return {"On which side of the image is the object?", QType::MultipleChoice, {"left", "right"},
              left ? "left" : "right"};
    default: {
      const bool holding = rng() % 2 == 0;
      canvas.rect(x - 0.10, 0.05, x + 0.10, 0.12, kColors[4]);
      if (holding) {
        canvas.rect(x - 0.08, 0.12, x + 0.08, 0.28, color);
      } else {
        draw_box(canvas, x, color);
      }
      return {"Is the gripper holding an object?", QType::YesNo, {}, yes_no(holding)};
    }
  }
}

Question robot_collected_scene(Canvas& canvas, std::mt19937_64& rng, std::string_view category) {
  const Color& color = kColors[rng() % kColors.size()];
  const bool left = rng() % 2 == 0;
  if (category == "human_presence_detection") {
    const bool present = rng() % 2 == 0;
    if (present) draw_person(canvas, left ? 0.3 : 0.7);
    draw_box(canvas, left ? 0.75 : 0.25, color);
    return {"Is a person visible?", QType::YesNo, {}, yes_no(present)};
  }
  if (category == "instruction_following") {
    draw_box(canvas, 0.5, color);
    return {"I asked you to bring me the box. What color is it?", QType::FreeForm, {}, color.name};
  }
  if (category == "spatial_relations") {
    draw_person(canvas, left ? 0.3 : 0.7);
    draw_box(canvas, left ? 0.7 : 0.3, color);
    return {"Is the box to the left or to the right of the person?", QType::MultipleChoice,
            {"left", "right"}, left ? "right" : "left"};
  }
  if (category == "social_navigation") {
    const bool blocked = rng() % 2 == 0;
    if (blocked) draw_person(canvas, 0.5);
    return {"Is the path straight ahead clear of people?", QType::YesNo, {}, yes_no(!blocked)};
  }
  const Gesture gesture = static_cast<Gesture>(rng() % 3);
  draw_person(canvas, 0.4, gesture, true);
  static constexpr std::array<const char*, 3> kNames{"wave", "point", "stop"};
  return {"Which gesture is the person making?", QType::MultipleChoice, {"wave", "point", "stop"},
          kNames[static_cast<int>(gesture)]};
}

}  // namespace

DatasetManifest generate_synthetic(const SyntheticOptions& options, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  if (!options.inline_images) fs::create_directories(out_dir / "images");

  DatasetManifest manifest;
  manifest.name = options.name;
  manifest.schema = options.schema;
  manifest.base_dir = out_dir;

  for (std::size_t i = 0; i < options.count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "%s-%04zu",
                  options.schema == Schema::RobotCollected ? "rc" : "r2v", i);
    std::mt19937_64 rng(derive_seed(options.seed, id, 0));
    Canvas canvas(options.image_size);

    DatasetItem item;
    item.id = id;
    Question q;
    if (options.schema == Schema::RobotCollected) {
      const auto category = kHriCategories[i % kHriCategories.size()];
      item.category = std::string(category);
      q = robot_collected_scene(canvas, rng, category);
    } else {
      q = robo2vlm_scene(canvas, rng);
    }
    item.question = q.text;
    item.qtype = q.qtype;
    item.choices = q.choices;
    item.gold = q.gold;

    const auto jpeg = imaging::encode_jpeg(canvas.image(), 90);
    if (options.inline_images) {
      item.image_b64 = base64_encode(jpeg);
    } else {
      const std::string rel = "images/" + item.id + ".jpg";
      std::ofstream out(out_dir / rel, std::ios::binary | std::ios::trunc);
      out.write(reinterpret_cast<const char*>(jpeg.data()), static_cast<std::streamsize>(jpeg.size()));
      if (!out) throw DatasetError(DatasetErrc::IoError, "cannot write " + (out_dir / rel).string());
      item.image_path = rel;
    }
    manifest.items.push_back(std::move(item));
  }
  write_dataset(manifest, out_dir / (options.name + ".jsonl"));
  return manifest;
}

}  // namespace vlmedge::dataset
