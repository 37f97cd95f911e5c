#pragma once

#include <string>
#include <string_view>

namespace vlmedge::evaluation {

struct NormalizeOptions {
  /// Drop the English articles a/an/the as whole words.
  bool strip_articles = false;
};

/// Unicode-aware lowercase, removal of every punctuation code point,
/// whitespace runs collapsed to one space, then trimmed. Invalid UTF-8 bytes
/// are replaced with U+FFFD before processing.
std::string normalize_answer(std::string_view text, NormalizeOptions options = {});

}  // namespace vlmedge::evaluation
