#include "relbench/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace relbench::text {

namespace {

const icu::Normalizer2& normalizer(const char* which) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = nullptr;
  if (std::string_view(which) == "nfc") {
    n = icu::Normalizer2::getNFCInstance(status);
  } else if (std::string_view(which) == "nfd") {
    n = icu::Normalizer2::getNFDInstance(status);
  } else {
    n = icu::Normalizer2::getNFKCCasefoldInstance(status);
  }
  if (U_FAILURE(status) || n == nullptr) {
    throw std::runtime_error(std::string("ICU normalizer unavailable: ") + u_errorName(status));
  }
  return *n;
}

std::string to_utf8(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

bool is_apostrophe(UChar32 c) {
  return c == 0x0027 || c == 0x2019 || c == 0x2018 || c == 0x02BC || c == 0x0060;
}

}  // namespace

std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string canonical(std::string_view raw) {
  const std::string trimmed = trim(raw);
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString s = icu::UnicodeString::fromUTF8(trimmed);
  icu::UnicodeString out = normalizer("nfc").normalize(s, status);
  if (U_FAILURE(status)) return trimmed;
  return to_utf8(out);
}

std::string fold_for_match(std::string_view raw) {
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString s = icu::UnicodeString::fromUTF8(icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
  icu::UnicodeString folded = normalizer("nfkc_cf").normalize(s, status);
  if (U_FAILURE(status)) folded = s;
  status = U_ZERO_ERROR;
  icu::UnicodeString decomposed = normalizer("nfd").normalize(folded, status);
  if (U_FAILURE(status)) decomposed = folded;

  icu::UnicodeString kept;
  bool pending_space = false;
  for (int32_t i = 0; i < decomposed.length();) {
    const UChar32 c = decomposed.char32At(i);
    i += U16_LENGTH(c);
    if (u_charType(c) == U_NON_SPACING_MARK) continue;
    if (is_apostrophe(c)) continue;
    if (u_isalnum(c)) {
      if (pending_space && !kept.isEmpty()) kept.append(static_cast<UChar>(' '));
      pending_space = false;
      kept.append(c);
    } else {
      pending_space = true;
    }
  }
  return to_utf8(kept);
}

std::vector<std::string> match_tokens(std::string_view raw) {
  const std::string folded = fold_for_match(raw);
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start < folded.size()) {
    std::size_t end = folded.find(' ', start);
    if (end == std::string::npos) end = folded.size();
    if (end > start) tokens.emplace_back(folded.substr(start, end - start));
    start = end + 1;
  }
  return tokens;
}

}  // namespace relbench::text
