#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlmedge/protocol/errors.hpp"

namespace vlmedge::protocol {

enum class MessageType { Query, Answer, Control, Transcript, Telemetry };

std::string_view to_string(MessageType type);
std::optional<MessageType> parse_message_type(std::string_view text);

/// Upper bound on a single framed body.
inline constexpr std::size_t kMaxMessageBody = 16u * 1024u * 1024u;

/// A JSON object with a mandatory "type" member, framed on the wire as a
/// 4-byte big-endian length followed by the UTF-8 body.
class DataMessage {
 public:
  /// Throws MalformedJson / UnknownMessageType if `body` lacks a valid type.
  explicit DataMessage(nlohmann::json body);

  static DataMessage make(MessageType type, nlohmann::json fields = nlohmann::json::object());

  MessageType type() const { return type_; }
  const nlohmann::json& body() const { return body_; }

 private:
  nlohmann::json body_;
  MessageType type_;
};

std::vector<std::uint8_t> encode_data_message(const DataMessage& message);

/// Decodes exactly one framed message occupying all of `bytes`.
DataMessage decode_data_message(std::span<const std::uint8_t> bytes);

/// Validates a raw body (without length prefix).
DataMessage parse_data_message_body(std::span<const std::uint8_t> body);

/// Stream helper: decodes the first complete message in `bytes`, setting
/// `consumed` to its framed length. Returns nullopt when more bytes are needed.
std::optional<DataMessage> try_decode_data_message(std::span<const std::uint8_t> bytes,
                                                   std::size_t& consumed);

}  // namespace vlmedge::protocol
