#pragma once

#include "vlmedge/backends/backend.hpp"
#include "vlmedge/protocol/frame.hpp"

namespace vlmedge::gateway {

/// Stage 1: decode (JPEG or raw), resize to the backend input size and
/// convert to planar float RGB. Throws GatewayError{ImageDecodeError}.
backends::PreprocessedImage preprocess_frame(const protocol::FrameEnvelope& frame, int width, int height);

}  // namespace vlmedge::gateway
