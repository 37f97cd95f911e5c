#include "vlmedge/gateway/preprocess.hpp"

#include "vlmedge/common/image.hpp"
#include "vlmedge/gateway/envelopes.hpp"

namespace vlmedge::gateway {

backends::PreprocessedImage preprocess_frame(const protocol::FrameEnvelope& frame, int width, int height) {
  imaging::RgbImage rgb;
  try {
    rgb = imaging::decode_frame(frame);
  } catch (const imaging::ImageDecodeError& e) {
    throw GatewayError(GatewayErrc::ImageDecodeError, e.what());
  }
  if (rgb.width <= 0 || rgb.height <= 0) {
    throw GatewayError(GatewayErrc::ImageDecodeError, "frame " + std::to_string(frame.frame_id) + " is empty");
  }
  return {width, height, imaging::resize_to_chw(rgb, width, height)};
}

}  // namespace vlmedge::gateway
