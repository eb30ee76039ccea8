// dialect_bench/text.hpp

// Copyright 2026 The dialect-bench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// UTF-8 text handling for transcript scoring. Unicode normalization and
// character classes come from ICU.

#ifndef DIALECT_BENCH_TEXT_HPP_
#define DIALECT_BENCH_TEXT_HPP_

#include <string>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "dialect_bench/common.hpp"

namespace dialect_bench {

struct NormalizationPolicy {
  bool strip_punctuation = true;
  bool remove_diacritics = false;
  bool normalize_alef_ya = false;
  // Whitespace is always collapsed and trimmed.
  bool operator==(const NormalizationPolicy &) const = default;
};

inline std::u32string DecodeUtf8(std::string_view s) {
  const auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  std::u32string out;
  out.reserve(static_cast<std::size_t>(u.length()));
  for (int32_t i = 0; i < u.length();) {
    const UChar32 c = u.char32At(i);
    out.push_back(static_cast<char32_t>(c));
    i += U16_LENGTH(c);
  }
  return out;
}

inline std::string EncodeUtf8(std::u32string_view s) {
  icu::UnicodeString u;
  for (char32_t c : s) u.append(static_cast<UChar32>(c));
  std::string out;
  u.toUTF8String(out);
  return out;
}

inline std::string Nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2 *nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw DataError("ICU NFC normalizer unavailable");
  const auto in = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  icu::UnicodeString out = nfc->normalize(in, status);
  if (U_FAILURE(status)) throw DataError("NFC normalization failed");
  std::string utf8;
  out.toUTF8String(utf8);
  return utf8;
}

/// Arabic harakat, Quranic annotation marks, superscript alef and tatweel.
inline bool IsArabicDiacritic(char32_t c) {
  return (c >= 0x064B && c <= 0x065F) || c == 0x0670 || (c >= 0x06D6 && c <= 0x06ED) || c == 0x0640;
}

inline char32_t FoldAlefYa(char32_t c) {
  switch (c) {
    case 0x0622:  // alef with madda
    case 0x0623:  // alef with hamza above
    case 0x0625:  // alef with hamza below
    case 0x0671:  // alef wasla
      return 0x0627;
    case 0x0649:  // alef maksura
      return 0x064A;
    default:
      return c;
  }
}

/// NFC, the policy's deletions and foldings, NFC again (deleting a mark can
/// unblock a composition), repeated to a fixpoint; then whitespace collapse.
/// Idempotent.
inline std::string NormalizeText(std::string_view text, const NormalizationPolicy &policy = {}) {
  std::u32string current = DecodeUtf8(Nfc(text));
  for (int round = 0; round < 8; ++round) {
    std::u32string kept;
    kept.reserve(current.size());
    for (char32_t c : current) {
      if (policy.strip_punctuation && u_ispunct(static_cast<UChar32>(c))) continue;
      if (policy.remove_diacritics && IsArabicDiacritic(c)) continue;
      kept.push_back(policy.normalize_alef_ya ? FoldAlefYa(c) : c);
    }
    std::u32string next = DecodeUtf8(Nfc(EncodeUtf8(kept)));
    if (next == current) break;
    current = std::move(next);
  }
  std::u32string out;
  bool pending_space = false;
  for (char32_t c : current) {
    if (u_isUWhiteSpace(static_cast<UChar32>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return EncodeUtf8(out);
}

inline std::vector<std::string> WordTokens(std::string_view normalized) {
  std::vector<std::string> words;
  std::size_t pos = 0;
  while (pos < normalized.size()) {
    while (pos < normalized.size() && normalized[pos] == ' ') ++pos;
    std::size_t end = normalized.find(' ', pos);
    if (end == std::string_view::npos) end = normalized.size();
    if (end > pos) words.emplace_back(normalized.substr(pos, end - pos));
    pos = end;
  }
  return words;
}

/// Unicode scalar values; spaces dropped unless `keep_spaces`.
inline std::u32string CharTokens(std::string_view normalized, bool keep_spaces = false) {
  std::u32string chars = DecodeUtf8(normalized);
  if (!keep_spaces) std::erase(chars, U' ');
  return chars;
}

}  // namespace dialect_bench

#endif  // DIALECT_BENCH_TEXT_HPP_
