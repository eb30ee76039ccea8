// dialect_bench/metrics_asr.hpp

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

#ifndef DIALECT_BENCH_METRICS_ASR_HPP_
#define DIALECT_BENCH_METRICS_ASR_HPP_

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dialect_bench/common.hpp"
#include "dialect_bench/text.hpp"

namespace dialect_bench {

enum class EditOp { kMatch, kSubstitution, kDeletion, kInsertion };

template <typename Token>
struct AlignedPair {
  EditOp op;
  std::optional<Token> ref;
  std::optional<Token> hyp;
};

template <typename Token>
struct AlignmentResult {
  std::size_t matches = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_len = 0;
  std::vector<AlignedPair<Token>> alignment;

  std::size_t errors() const { return substitutions + deletions + insertions; }
};

/// Unit-cost Levenshtein alignment. The backtrace prefers match, then
/// substitution, deletion, insertion, so the path is deterministic.
template <typename Token>
AlignmentResult<Token> Align(std::span<const Token> ref, std::span<const Token> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  Matrix<std::uint32_t> d(n + 1, m + 1);
  for (std::size_t i = 0; i <= n; ++i) d(i, 0) = static_cast<std::uint32_t>(i);
  for (std::size_t j = 0; j <= m; ++j) d(0, j) = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const std::uint32_t diag = d(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0u : 1u);
      d(i, j) = std::min({diag, d(i - 1, j) + 1, d(i, j - 1) + 1});
    }

  AlignmentResult<Token> r;
  r.ref_len = n;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const auto here = d(i, j);
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && d(i - 1, j - 1) == here) {
      r.alignment.push_back({EditOp::kMatch, ref[i - 1], hyp[j - 1]});
      ++r.matches;
      --i, --j;
    } else if (i > 0 && j > 0 && d(i - 1, j - 1) + 1 == here) {
      r.alignment.push_back({EditOp::kSubstitution, ref[i - 1], hyp[j - 1]});
      ++r.substitutions;
      --i, --j;
    } else if (i > 0 && d(i - 1, j) + 1 == here) {
      r.alignment.push_back({EditOp::kDeletion, ref[i - 1], std::nullopt});
      ++r.deletions;
      --i;
    } else {
      r.alignment.push_back({EditOp::kInsertion, std::nullopt, hyp[j - 1]});
      ++r.insertions;
      --j;
    }
  }
  std::reverse(r.alignment.begin(), r.alignment.end());
  return r;
}

template <typename Token>
AlignmentResult<Token> Align(const std::vector<Token> &ref, const std::vector<Token> &hyp) {
  return Align(std::span<const Token>(ref), std::span<const Token>(hyp));
}

enum class ErrorUnit { kWord, kChar };

struct ErrorCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_len = 0;

  std::size_t errors() const { return substitutions + deletions + insertions; }
  /// Percentage; undefined (throws) for an empty reference total.
  double rate() const {
    if (ref_len == 0) throw DataError("error rate: references are empty after normalization");
    return 100.0 * static_cast<double>(errors()) / static_cast<double>(ref_len);
  }
  ErrorCounts &operator+=(const ErrorCounts &o) {
    substitutions += o.substitutions;
    deletions += o.deletions;
    insertions += o.insertions;
    ref_len += o.ref_len;
    return *this;
  }
};

struct ScoringOptions {
  NormalizationPolicy policy;
  bool cer_keep_spaces = false;
};

inline ErrorCounts PairErrors(std::string_view ref, std::string_view hyp, ErrorUnit unit,
                              const ScoringOptions &opt = {}) {
  const auto r = NormalizeText(ref, opt.policy);
  const auto h = NormalizeText(hyp, opt.policy);
  auto counts = [](const auto &a) {
    return ErrorCounts{a.substitutions, a.deletions, a.insertions, a.ref_len};
  };
  if (unit == ErrorUnit::kWord) return counts(Align(WordTokens(r), WordTokens(h)));
  const auto rc = CharTokens(r, opt.cer_keep_spaces), hc = CharTokens(h, opt.cer_keep_spaces);
  return counts(Align(std::span<const char32_t>(rc.data(), rc.size()),
                      std::span<const char32_t>(hc.data(), hc.size())));
}

using TextPair = std::pair<std::string, std::string>;  // (reference, hypothesis)

/// Edits summed over all pairs, divided by the summed reference length.
inline ErrorCounts CorpusErrors(std::span<const TextPair> pairs, ErrorUnit unit,
                                const ScoringOptions &opt = {}) {
  if (pairs.empty()) throw DataError("error rate: no reference/hypothesis pairs");
  ErrorCounts total;
  for (const auto &[ref, hyp] : pairs) total += PairErrors(ref, hyp, unit, opt);
  return total;
}

inline double CorpusErrorRate(std::span<const TextPair> pairs, ErrorUnit unit,
                              const ScoringOptions &opt = {}) {
  return CorpusErrors(pairs, unit, opt).rate();
}

/// Unweighted mean of per-dialect rates.
inline double MacroAverage(const std::map<std::string, double> &per_dialect) {
  if (per_dialect.empty()) throw DataError("macro average: no dialects");
  double sum = 0.0;
  for (const auto &[code, rate] : per_dialect) sum += rate;
  return sum / static_cast<double>(per_dialect.size());
}

// ---------------------------------------------------------------------------
// Transcript files: "utt_id<TAB>text" per line, UTF-8, NFC-normalized on load.

struct Transcripts {
  std::vector<std::string> order;
  std::map<std::string, std::string> text;
};

inline Transcripts ParseTranscripts(std::string_view data, const std::string &name = "<transcripts>") {
  Transcripts t;
  std::size_t pos = 0, line_no = 0;
  while (pos < data.size()) {
    std::size_t nl = data.find('\n', pos);
    if (nl == std::string_view::npos) nl = data.size();
    auto line = ChompCr(data.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const std::string id(line.substr(0, tab));
    const std::string text = tab == std::string_view::npos ? std::string() : Nfc(line.substr(tab + 1));
    if (id.empty()) throw DataError(name + " line " + std::to_string(line_no) + ": empty utt_id");
    if (!t.text.emplace(id, text).second)
      throw DataError(name + " line " + std::to_string(line_no) + ": duplicate utt_id " + id);
    t.order.push_back(id);
  }
  return t;
}

inline Transcripts LoadTranscripts(const std::string &path) {
  return ParseTranscripts(ReadFileBytes(path), path);
}

struct DialectAsrScore {
  std::string dialect;
  ErrorCounts words;
  ErrorCounts chars;
  std::size_t missing_hypotheses = 0;
};

/// Scores references against hypotheses; a missing hypothesis counts as empty.
inline DialectAsrScore ScoreDialect(const std::string &dialect, const std::vector<std::string> &utt_ids,
                                    const std::map<std::string, std::string> &refs,
                                    const std::map<std::string, std::string> &hyps,
                                    const ScoringOptions &opt = {}) {
  DialectAsrScore s{dialect, {}, {}, 0};
  std::vector<TextPair> pairs;
  for (const auto &id : utt_ids) {
    auto r = refs.find(id);
    if (r == refs.end()) throw DataError("no reference transcript for " + id);
    auto h = hyps.find(id);
    if (h == hyps.end()) ++s.missing_hypotheses;
    pairs.emplace_back(r->second, h == hyps.end() ? std::string() : h->second);
  }
  s.words = CorpusErrors(pairs, ErrorUnit::kWord, opt);
  s.chars = CorpusErrors(pairs, ErrorUnit::kChar, opt);
  return s;
}

/// Per-dialect CSV with a trailing macro-average row.
inline std::string FormatAsrReport(const std::vector<DialectAsrScore> &scores) {
  std::ostringstream os;
  os << std::fixed;
  os.precision(2);
  os << "dialect,wer,cer,word_sub,word_del,word_ins,ref_words,char_sub,char_del,char_ins,ref_chars\n";
  std::map<std::string, double> wer, cer;
  for (const auto &s : scores) {
    wer[s.dialect] = s.words.rate();
    cer[s.dialect] = s.chars.rate();
    os << s.dialect << ',' << wer[s.dialect] << ',' << cer[s.dialect] << ',' << s.words.substitutions << ','
       << s.words.deletions << ',' << s.words.insertions << ',' << s.words.ref_len << ','
       << s.chars.substitutions << ',' << s.chars.deletions << ',' << s.chars.insertions << ','
       << s.chars.ref_len << '\n';
  }
  os << "MACRO," << MacroAverage(wer) << ',' << MacroAverage(cer) << ",,,,,,,,\n";
  return os.str();
}

}  // namespace dialect_bench

#endif  // DIALECT_BENCH_METRICS_ASR_HPP_
