// Copyright 2026 The healthtext Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// UTF-8 helpers. All public offsets in healthtext count Unicode scalar values,
// so every slice goes through these functions rather than byte indexing.

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "healthtext/error.hpp"

namespace healthtext::unicode {

static_assert(sizeof(wchar_t) == 4, "wide regex matching assumes UTF-32 wchar_t");

inline std::u32string decode(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto len = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < len) {
    UChar32 c;
    U8_NEXT(s, i, len, c);
    out.push_back(c < 0 ? U'\uFFFD' : static_cast<char32_t>(c));
  }
  return out;
}

inline std::string encode(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text) {
    uint8_t buf[4];
    int32_t n = 0;
    U8_APPEND_UNSAFE(buf, n, static_cast<UChar32>(c));
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
  }
  return out;
}

inline std::size_t length(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

// Substring [start, end) in scalar-value offsets.
inline std::string slice(std::string_view text, std::size_t start,
                         std::size_t end) {
  const auto cps = decode(text);
  if (start > end || end > cps.size()) {
    throw std::out_of_range("slice [" + std::to_string(start) + "," +
                            std::to_string(end) + ") outside text of length " +
                            std::to_string(cps.size()));
  }
  return encode(std::u32string_view(cps).substr(start, end - start));
}

inline std::wstring to_wide(std::u32string_view text) {
  return std::wstring(text.begin(), text.end());
}

inline bool is_alnum(char32_t c) { return u_isalnum(static_cast<UChar32>(c)); }
inline bool is_space(char32_t c) {
  return u_isUWhiteSpace(static_cast<UChar32>(c));
}
inline bool is_upper(char32_t c) { return u_isupper(static_cast<UChar32>(c)); }
inline bool is_mark(char32_t c) {
  const auto t = u_charType(static_cast<UChar32>(c));
  return t == U_NON_SPACING_MARK || t == U_COMBINING_SPACING_MARK ||
         t == U_ENCLOSING_MARK;
}

namespace detail {

inline const icu::Normalizer2& instance(bool compose) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = compose ? icu::Normalizer2::getNFCInstance(status)
                                      : icu::Normalizer2::getNFDInstance(status);
  if (U_FAILURE(status) || n == nullptr) {
    throw Error(std::string("ICU normalizer unavailable: ") +
                u_errorName(status));
  }
  return *n;
}

inline icu::UnicodeString apply(const icu::Normalizer2& n,
                                const icu::UnicodeString& s) {
  UErrorCode status = U_ZERO_ERROR;
  auto out = n.normalize(s, status);
  if (U_FAILURE(status)) {
    throw Error(std::string("ICU normalization failed: ") + u_errorName(status));
  }
  return out;
}

inline std::string to_utf8(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

}  // namespace detail

inline std::string nfc(std::string_view text) {
  auto s = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  return detail::to_utf8(detail::apply(detail::instance(true), s));
}

inline std::string lowercase(std::string_view text) {
  auto s = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  s.toLower(icu::Locale::getRoot());
  return detail::to_utf8(s);
}

// NFD, drop combining marks, recompose.
inline std::string strip_accents(std::string_view text) {
  auto s = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  auto decomposed = detail::to_utf8(detail::apply(detail::instance(false), s));
  std::u32string kept;
  for (char32_t c : decode(decomposed)) {
    if (!is_mark(c)) kept.push_back(c);
  }
  return nfc(encode(kept));
}

}  // namespace healthtext::unicode
