#include "vlmedge/protocol/data_message.hpp"

#include <array>
#include <string>

#include "byte_order.hpp"

namespace vlmedge::protocol {

namespace {

constexpr std::array<std::pair<MessageType, std::string_view>, 5> kTypeNames{{
    {MessageType::Query, "query"},
    {MessageType::Answer, "answer"},
    {MessageType::Control, "control"},
    {MessageType::Transcript, "transcript"},
    {MessageType::Telemetry, "telemetry"},
}};

MessageType type_of(const nlohmann::json& body) {
  if (!body.is_object()) throw ProtocolError(ProtocolErrc::MalformedJson, "body is not an object");
  auto it = body.find("type");
  if (it == body.end() || !it->is_string()) {
    throw ProtocolError(ProtocolErrc::MalformedJson, "missing string member \"type\"");
  }
  const auto& name = it->get_ref<const std::string&>();
  auto type = parse_message_type(name);
  if (!type) throw ProtocolError(ProtocolErrc::UnknownMessageType, "unknown type \"" + name + "\"");
  return *type;
}

}  // namespace

std::string_view to_string(MessageType type) {
  for (const auto& [t, name] : kTypeNames) {
    if (t == type) return name;
  }
  return "unknown";
}

std::optional<MessageType> parse_message_type(std::string_view text) {
  for (const auto& [t, name] : kTypeNames) {
    if (name == text) return t;
  }
  return std::nullopt;
}

DataMessage::DataMessage(nlohmann::json body) : body_(std::move(body)), type_(type_of(body_)) {}

DataMessage DataMessage::make(MessageType type, nlohmann::json fields) {
  fields["type"] = std::string(to_string(type));
  return DataMessage(std::move(fields));
}

std::vector<std::uint8_t> encode_data_message(const DataMessage& message) {
  const std::string body = message.body().dump();
  if (body.size() > kMaxMessageBody) {
    throw ProtocolError(ProtocolErrc::MessageTooLarge, "message body exceeds limit");
  }
  std::vector<std::uint8_t> out;
  out.reserve(4 + body.size());
  detail::put_be<std::uint32_t>(out, static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

DataMessage parse_data_message_body(std::span<const std::uint8_t> body) {
  nlohmann::json parsed = nlohmann::json::parse(body.begin(), body.end(), nullptr, false);
  if (parsed.is_discarded()) throw ProtocolError(ProtocolErrc::MalformedJson, "body is not valid JSON");
  return DataMessage(std::move(parsed));
}

std::optional<DataMessage> try_decode_data_message(std::span<const std::uint8_t> bytes,
                                                   std::size_t& consumed) {
  if (bytes.size() < 4) return std::nullopt;
  const std::size_t length = detail::get_be<std::uint32_t>(bytes, 0);
  if (length > kMaxMessageBody) {
    throw ProtocolError(ProtocolErrc::MessageTooLarge,
                        "declared length " + std::to_string(length) + " exceeds limit");
  }
  if (bytes.size() - 4 < length) return std::nullopt;
  consumed = 4 + length;
  return parse_data_message_body(bytes.subspan(4, length));
}

DataMessage decode_data_message(std::span<const std::uint8_t> bytes) {
  std::size_t consumed = 0;
  auto message = try_decode_data_message(bytes, consumed);
  if (!message) throw ProtocolError(ProtocolErrc::Truncated, "incomplete data message");
  if (consumed != bytes.size()) {
    throw ProtocolError(ProtocolErrc::MalformedJson, "trailing bytes after data message");
  }
  return std::move(*message);
}

}  // namespace vlmedge::protocol
