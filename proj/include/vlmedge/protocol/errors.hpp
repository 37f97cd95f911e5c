#pragma once

#include <string_view>

#include "vlmedge/common/error.hpp"

namespace vlmedge::protocol {

enum class ProtocolErrc {
  InvalidPacket,
  BadMagic,
  UnsupportedVersion,
  Truncated,
  MixedFrame,
  ConflictingDuplicate,
  MalformedJson,
  UnknownMessageType,
  MessageTooLarge,
};

std::string_view to_string(ProtocolErrc code);

using ProtocolError = CodedError<ProtocolErrc>;

}  // namespace vlmedge::protocol
