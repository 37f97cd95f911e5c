#pragma once

#include <string_view>

#include "vlmedge/common/error.hpp"

namespace vlmedge::transport {

enum class TransportErrc { ChannelClosed, InvalidReport, FrameTooLarge, ConnectFailed, Timeout };

std::string_view to_string(TransportErrc code);

using TransportError = CodedError<TransportErrc>;

}  // namespace vlmedge::transport
