#ifndef ENTYPER_TEXT_HPP_
#define ENTYPER_TEXT_HPP_

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>
#include <unicode/utypes.h>

namespace entyper {

namespace detail {

inline const icu::Normalizer2& nfc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr) {
    throw std::runtime_error(std::string("ICU NFC unavailable: ") + u_errorName(status));
  }
  return *n;
}

inline std::string to_utf8(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

inline bool is_ascii(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

}  // namespace detail

/// NFC-normalizes `raw` and strips surrounding whitespace. Case is kept.
/// An all-whitespace input yields "" and callers are expected to drop it.
inline std::string normalize_token(std::string_view raw) {
  if (detail::is_ascii(raw)) {
    auto first = raw.find_first_not_of(" \t\r\n\f\v");
    if (first == std::string_view::npos) return {};
    auto last = raw.find_last_not_of(" \t\r\n\f\v");
    return std::string(raw.substr(first, last - first + 1));
  }
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString composed = detail::nfc().normalize(u, status);
  if (U_FAILURE(status)) {
    throw std::runtime_error(std::string("NFC normalization failed: ") + u_errorName(status));
  }
  composed.trim();
  return detail::to_utf8(composed);
}

/// Unicode default case folding.
inline std::string casefold(std::string_view s) {
  if (detail::is_ascii(s)) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  }
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  u.foldCase();
  return detail::to_utf8(u);
}

/// The word form used for document statistics and index lookups.
inline std::string index_word(std::string_view token) {
  return casefold(normalize_token(token));
}

/// ASCII lowercase; type paths are ASCII in practice and this avoids ICU for
/// the hot pattern-matching path.
inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string_view trim_view(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_view(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

/// Concept identifiers: NFC, trimmed, inner spaces replaced by underscores.
inline std::string canonical_concept(std::string_view raw) {
  std::string s = normalize_token(raw);
  std::replace(s.begin(), s.end(), ' ', '_');
  return s;
}

}  // namespace entyper

#endif  // ENTYPER_TEXT_HPP_
