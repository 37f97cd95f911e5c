#include "vlmedge/common/image.hpp"

#include <limits>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace vlmedge::imaging {

namespace {

RgbImage from_bgr(const cv::Mat& bgr) {
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  RgbImage out;
  out.width = rgb.cols;
  out.height = rgb.rows;
  out.pixels.assign(rgb.datastart, rgb.dataend);
  return out;
}

cv::Mat to_bgr(const RgbImage& image) {
  cv::Mat rgb(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.pixels.data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

}  // namespace

bool looks_like_jpeg(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
}

RgbImage decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw ImageDecodeError("empty image");
  cv::Mat encoded(1, static_cast<int>(bytes.size()), CV_8UC1,
                  const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat bgr;
  try {
    bgr = cv::imdecode(encoded, cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    throw ImageDecodeError(std::string("image decode failed: ") + e.what());
  }
  if (bgr.empty()) throw ImageDecodeError("image decode failed");
  return from_bgr(bgr);
}

RgbImage decode_frame(const protocol::FrameEnvelope& frame) {
  switch (frame.pixel_format) {
    case protocol::PixelFormat::RawRgb8: {
      if (frame.width == 0 || frame.height == 0 ||
          frame.data.size() != std::size_t{frame.width} * frame.height * 3) {
        throw ImageDecodeError("raw frame size does not match dimensions");
      }
      return RgbImage{frame.width, frame.height, frame.data};
    }
    case protocol::PixelFormat::Jpeg: {
      if (!looks_like_jpeg(frame.data)) throw ImageDecodeError("payload is not a JPEG stream");
      RgbImage image = decode_image(frame.data);
      if (image.width != frame.width || image.height != frame.height) {
        throw ImageDecodeError("JPEG dimensions disagree with frame header");
      }
      return image;
    }
  }
  throw ImageDecodeError("unknown pixel format");
}

std::vector<std::uint8_t> encode_jpeg(const RgbImage& image, int quality) {
  std::vector<std::uint8_t> out;
  cv::imencode(".jpg", to_bgr(image), out, {cv::IMWRITE_JPEG_QUALITY, quality});
  return out;
}

protocol::FrameEnvelope frame_from_image_bytes(std::span<const std::uint8_t> bytes) {
  RgbImage image = decode_image(bytes);
  if (image.width > std::numeric_limits<std::uint16_t>::max() ||
      image.height > std::numeric_limits<std::uint16_t>::max()) {
    throw ImageDecodeError("image dimensions exceed 65535");
  }
  protocol::FrameEnvelope frame;
  frame.width = static_cast<std::uint16_t>(image.width);
  frame.height = static_cast<std::uint16_t>(image.height);
  if (looks_like_jpeg(bytes)) {
    frame.pixel_format = protocol::PixelFormat::Jpeg;
    frame.data.assign(bytes.begin(), bytes.end());
  } else {
    frame.pixel_format = protocol::PixelFormat::RawRgb8;
    frame.data = std::move(image.pixels);
  }
  return frame;
}

std::vector<std::uint8_t> frame_as_jpeg(const protocol::FrameEnvelope& frame, int quality) {
  if (frame.pixel_format == protocol::PixelFormat::Jpeg) return frame.data;
  return encode_jpeg(decode_frame(frame), quality);
}

}  // namespace vlmedge::imaging

namespace vlmedge::imaging {

std::vector<float> resize_to_chw(const RgbImage& image, int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("target size must be positive");
  cv::Mat rgb(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.pixels.data()));
  cv::Mat resized;
  cv::resize(rgb, resized, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
  cv::Mat scaled;
  resized.convertTo(scaled, CV_32FC3, 1.0 / 255.0);
  std::vector<float> chw(static_cast<std::size_t>(width) * height * 3);
  std::vector<cv::Mat> planes;
  for (int c = 0; c < 3; ++c) {
    planes.emplace_back(height, width, CV_32FC1, chw.data() + static_cast<std::size_t>(c) * width * height);
  }
  cv::split(scaled, planes);
  return chw;
}

}  // namespace vlmedge::imaging
