// dialect_bench/corpus.hpp

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

#ifndef DIALECT_BENCH_CORPUS_HPP_
#define DIALECT_BENCH_CORPUS_HPP_

#include <charconv>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dialect_bench/common.hpp"

namespace dialect_bench {

struct DialectLabel {
  std::string code;
  std::string display_name;
  bool operator==(const DialectLabel &) const = default;
};

/// Ordered set of dialect labels. The position of a code is its class index.
class Registry {
 public:
  Registry() = default;
  explicit Registry(std::vector<DialectLabel> labels) : labels_(std::move(labels)) {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      const auto &code = labels_[i].code;
      if (code.empty()) throw DataError("registry: empty dialect code");
      if (!index_.emplace(code, i).second)
        throw DataError("registry: duplicate dialect code " + code);
    }
  }

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  const std::vector<DialectLabel> &labels() const { return labels_; }
  const DialectLabel &operator[](std::size_t i) const { return labels_[i]; }

  bool contains(const std::string &code) const { return index_.count(code) > 0; }

  std::optional<std::size_t> find(const std::string &code) const {
    auto it = index_.find(code);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(const std::string &code) const {
    auto idx = find(code);
    if (!idx) throw DataError("dialect code not in registry: " + code);
    return *idx;
  }

  std::vector<std::string> codes() const {
    std::vector<std::string> out;
    out.reserve(labels_.size());
    for (const auto &l : labels_) out.push_back(l.code);
    return out;
  }

  bool operator==(const Registry &other) const { return labels_ == other.labels_; }

 private:
  std::vector<DialectLabel> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// The eight country-level varieties with both dialect-ID and ASR data.
inline Registry NadiRegistry() {
  return Registry({{"ALG", "Algeria"},
                   {"EGY", "Egypt"},
                   {"JOR", "Jordan"},
                   {"MAU", "Mauritania"},
                   {"MOR", "Morocco"},
                   {"PAL", "Palestine"},
                   {"UAE", "UAE"},
                   {"YEM", "Yemen"}});
}

/// ADI-20 shape: the ADI-17 countries plus Bahrain, Tunisia and MSA.
inline Registry Adi20Registry() {
  return Registry({{"ALG", "Algeria"},      {"BAH", "Bahrain"},
                   {"EGY", "Egypt"},        {"IRA", "Iraq"},
                   {"JOR", "Jordan"},       {"KSA", "Saudi Arabia"},
                   {"KUW", "Kuwait"},       {"LEB", "Lebanon"},
                   {"LIB", "Libya"},        {"MAU", "Mauritania"},
                   {"MOR", "Morocco"},      {"MSA", "Modern Standard Arabic"},
                   {"OMA", "Oman"},         {"PAL", "Palestine"},
                   {"QAT", "Qatar"},        {"SUD", "Sudan"},
                   {"SYR", "Syria"},        {"TUN", "Tunisia"},
                   {"UAE", "UAE"},          {"YEM", "Yemen"}});
}

inline Registry Adi17Registry() {
  std::vector<DialectLabel> labels;
  for (const auto &l : Adi20Registry().labels())
    if (l.code != "BAH" && l.code != "TUN" && l.code != "MSA") labels.push_back(l);
  return Registry(std::move(labels));
}

enum class Split { kTrain, kAdaptation, kValidation, kTest };

inline const char *SplitName(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kAdaptation: return "adaptation";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "?";
}

inline std::optional<Split> ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "adaptation") return Split::kAdaptation;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

struct UtteranceRecord {
  std::string utt_id;
  std::string audio_path;
  std::string dialect;
  double duration_s = 0.0;
  Split split = Split::kTrain;
  std::string transcript;  // empty when absent
  bool operator==(const UtteranceRecord &) const = default;
};

struct Manifest {
  Registry registry;
  std::vector<UtteranceRecord> records;

  std::vector<const UtteranceRecord *> split_records(Split s) const {
    std::vector<const UtteranceRecord *> out;
    for (const auto &r : records)
      if (r.split == s) out.push_back(&r);
    return out;
  }

  bool has_split(Split s) const {
    for (const auto &r : records)
      if (r.split == s) return true;
    return false;
  }
};

/// Checks record-level and manifest-level invariants. Throws DataError.
inline void ValidateManifest(const Manifest &m) {
  std::unordered_set<std::string> seen;
  for (const auto &r : m.records) {
    if (r.utt_id.empty()) throw DataError("empty utt_id");
    if (!seen.insert(r.utt_id).second)
      throw DataError("duplicate utt_id: " + r.utt_id);
    if (!(r.duration_s > 0.0) || !std::isfinite(r.duration_s))
      throw DataError("non-positive duration for " + r.utt_id);
    if (!m.registry.contains(r.dialect))
      throw DataError("unknown dialect code '" + r.dialect + "' for " + r.utt_id);
  }
}

/// Registry of every code the toolkit knows (ADI-20 superset of NADI).
inline Registry KnownDialects() { return Adi20Registry(); }

/// Restricts `full` to the codes used by `records`, keeping registry order.
inline Registry UsedRegistry(const Registry &full,
                             const std::vector<UtteranceRecord> &records) {
  std::unordered_set<std::string> used;
  for (const auto &r : records) used.insert(r.dialect);
  std::vector<DialectLabel> labels;
  for (const auto &l : full.labels())
    if (used.count(l.code)) labels.push_back(l);
  return Registry(std::move(labels));
}

inline UtteranceRecord ParseManifestLine(std::string_view line, std::size_t line_no) {
  auto fail = [&](const std::string &why) {
    return DataError("manifest line " + std::to_string(line_no) + ": " + why);
  };
  auto fields = SplitTabs(line);
  if (fields.size() < 5 || fields.size() > 6)
    throw fail("expected 5 or 6 tab-separated fields, got " +
               std::to_string(fields.size()));
  UtteranceRecord r;
  r.utt_id = std::string(fields[0]);
  r.audio_path = std::string(fields[1]);
  r.dialect = std::string(fields[2]);
  if (r.utt_id.empty()) throw fail("empty utt_id");
  const auto dur = fields[3];
  auto [ptr, ec] = std::from_chars(dur.data(), dur.data() + dur.size(), r.duration_s);
  if (ec != std::errc() || ptr != dur.data() + dur.size())
    throw fail("bad duration '" + std::string(dur) + "'");
  if (!(r.duration_s > 0.0) || !std::isfinite(r.duration_s))
    throw fail("duration must be positive");
  auto split = ParseSplit(fields[4]);
  if (!split) throw fail("unknown split '" + std::string(fields[4]) + "'");
  r.split = *split;
  if (fields.size() == 6) r.transcript = std::string(fields[5]);
  return r;
}

/// Parses manifest text. Blank lines are skipped. When `registry` is empty,
/// the known dialects restricted to the codes in use become the registry.
inline Manifest ParseManifest(std::string_view text, const Registry &registry = {}) {
  Manifest m;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = ChompCr(text.substr(pos, nl - pos));
    ++line_no;
    pos = nl + 1;
    if (line.empty()) continue;
    m.records.push_back(ParseManifestLine(line, line_no));
  }
  if (registry.empty()) {
    Registry known = KnownDialects();
    for (const auto &r : m.records)
      if (!known.contains(r.dialect))
        throw DataError("unknown dialect code '" + r.dialect + "' for " + r.utt_id);
    m.registry = UsedRegistry(known, m.records);
  } else {
    m.registry = registry;
  }
  ValidateManifest(m);
  return m;
}

inline Manifest LoadManifest(const std::string &path, const Registry &registry = {}) {
  return ParseManifest(ReadFileBytes(path), registry);
}

inline std::string FormatDuration(double seconds) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), seconds);
  return std::string(buf, res.ptr);
}

inline std::string FormatManifest(const Manifest &m) {
  std::string out;
  for (const auto &r : m.records) {
    out += r.utt_id;
    out += '\t';
    out += r.audio_path;
    out += '\t';
    out += r.dialect;
    out += '\t';
    out += FormatDuration(r.duration_s);
    out += '\t';
    out += SplitName(r.split);
    out += '\t';
    out += r.transcript;
    out += '\n';
  }
  return out;
}

inline void SaveManifest(const Manifest &m, const std::string &path) {
  WriteFileBytes(path, FormatManifest(m));
}

/// Hours per dialect for one split. Absent split yields an empty map.
inline std::map<std::string, double> DurationSummary(const Manifest &m, Split split) {
  std::map<std::string, double> seconds;
  for (const auto &r : m.records)
    if (r.split == split) seconds[r.dialect] += r.duration_s;
  for (auto &[code, s] : seconds) s /= 3600.0;
  return seconds;
}

inline double TotalHours(const std::map<std::string, double> &summary) {
  double total = 0.0;
  for (const auto &[code, h] : summary) total += h;
  return total;
}

/// Caps every dialect of `split` at `cap_hours`. Each dialect's records are
/// visited in a seeded shuffle and accumulated until the next record would
/// exceed the cap; audio is never truncated. Dialects already under the cap
/// keep every record. Records of other splits pass through untouched and the
/// output keeps manifest order.
inline Manifest StratifiedSubset(const Manifest &m, Split split, double cap_hours,
                                 std::uint64_t seed) {
  if (!(cap_hours > 0.0)) throw DataError("cap_hours must be positive");
  const double cap_s = cap_hours * 3600.0;

  std::map<std::string, std::vector<std::size_t>> by_dialect;
  for (std::size_t i = 0; i < m.records.size(); ++i)
    if (m.records[i].split == split) by_dialect[m.records[i].dialect].push_back(i);

  std::vector<bool> keep(m.records.size(), true);
  for (auto &[code, idx] : by_dialect) {
    double available = 0.0;
    for (auto i : idx) available += m.records[i].duration_s;
    if (available <= cap_s) continue;

    Rng rng(seed ^ Fnv1a(code));
    rng.Shuffle(idx);
    for (auto i : idx) keep[i] = false;
    double acc = 0.0;
    for (auto i : idx) {
      const double d = m.records[i].duration_s;
      if (acc + d > cap_s) break;
      acc += d;
      keep[i] = true;
    }
  }

  Manifest out;
  out.registry = m.registry;
  for (std::size_t i = 0; i < m.records.size(); ++i)
    if (keep[i]) out.records.push_back(m.records[i]);
  return out;
}

}  // namespace dialect_bench

#endif  // DIALECT_BENCH_CORPUS_HPP_
