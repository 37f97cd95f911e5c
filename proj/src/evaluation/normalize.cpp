#include "vlmedge/evaluation/normalize.hpp"

#include <sstream>
#include <vector>

#include <unicode/locid.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

namespace vlmedge::evaluation {

std::string normalize_answer(std::string_view text, NormalizeOptions options) {
  icu::UnicodeString lowered =
      icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<std::int32_t>(text.size())));
  lowered.toLower(icu::Locale::getRoot());

  icu::UnicodeString kept;
  bool pending_space = false;
  for (std::int32_t i = 0; i < lowered.length();) {
    const UChar32 c = lowered.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c)) {
      pending_space = !kept.isEmpty();
      continue;
    }
    if (u_ispunct(c)) continue;
    if (pending_space) kept.append(static_cast<UChar>(u' '));
    pending_space = false;
    kept.append(c);
  }

  std::string out;
  kept.toUTF8String(out);
  if (!options.strip_articles) return out;

  std::istringstream words(out);
  std::string word;
  std::string stripped;
  while (words >> word) {
    if (word == "a" || word == "an" || word == "the") continue;
    if (!stripped.empty()) stripped += ' ';
    stripped += word;
  }
  return stripped;
}

}  // namespace vlmedge::evaluation
