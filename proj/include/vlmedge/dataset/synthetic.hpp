#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "vlmedge/dataset/dataset.hpp"

namespace vlmedge::dataset {

struct SyntheticOptions {
  std::string name = "synthetic";
  Schema schema = Schema::Robo2Vlm;
  std::size_t count = 200;
  std::uint64_t seed = 42;
  int image_size = 96;
  /// Embed images as base64 instead of writing files under images/.
  bool inline_images = false;
};

/// Generates simple rendered scenes with questions whose gold answers follow
/// from the picture. robot_collected sets cycle through the five HRI
/// categories. Writes `<out_dir>/<name>.jsonl` (plus images) and returns the
/// manifest. Identical options give identical files.
DatasetManifest generate_synthetic(const SyntheticOptions& options, const std::filesystem::path& out_dir);

}  // namespace vlmedge::dataset
