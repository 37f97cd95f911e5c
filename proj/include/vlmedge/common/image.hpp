#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "vlmedge/protocol/frame.hpp"

namespace vlmedge::imaging {

class ImageDecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Interleaved 8-bit RGB.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

bool looks_like_jpeg(std::span<const std::uint8_t> bytes);

/// Decodes a frame's payload to RGB. Throws ImageDecodeError.
RgbImage decode_frame(const protocol::FrameEnvelope& frame);

/// Decodes any format OpenCV reads (JPEG, PNG, PPM). Throws ImageDecodeError.
RgbImage decode_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_jpeg(const RgbImage& image, int quality);

/// Builds a frame from image file bytes: JPEG stays JPEG, anything else is
/// decoded to RAW_RGB8. Throws ImageDecodeError.
protocol::FrameEnvelope frame_from_image_bytes(std::span<const std::uint8_t> bytes);

/// Bilinear resize to width x height, then planar float RGB scaled to [0, 1].
std::vector<float> resize_to_chw(const RgbImage& image, int width, int height);

/// Frame payload as JPEG bytes, encoding raw frames at `quality`.
std::vector<std::uint8_t> frame_as_jpeg(const protocol::FrameEnvelope& frame, int quality = 85);

}  // namespace vlmedge::imaging
