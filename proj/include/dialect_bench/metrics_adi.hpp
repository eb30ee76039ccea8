// dialect_bench/metrics_adi.hpp

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

#ifndef DIALECT_BENCH_METRICS_ADI_HPP_
#define DIALECT_BENCH_METRICS_ADI_HPP_

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "dialect_bench/common.hpp"
#include "dialect_bench/corpus.hpp"

namespace dialect_bench {

struct TrialScores {
  std::vector<std::string> utt_ids;
  Matrix<double> log_posteriors;  // N x C, natural log
  std::vector<std::size_t> labels;
  Registry registry;

  std::size_t num_trials() const { return labels.size(); }
  std::size_t num_classes() const { return registry.size(); }
};

inline void ValidateScores(const TrialScores &ts, double tolerance = 1e-6) {
  const std::size_t n = ts.labels.size(), c = ts.registry.size();
  if (ts.utt_ids.size() != n || ts.log_posteriors.rows() != n || ts.log_posteriors.cols() != c)
    throw DataError("scores: inconsistent table shape");
  for (std::size_t i = 0; i < n; ++i) {
    if (ts.labels[i] >= c) throw DataError("scores: label out of range for " + ts.utt_ids[i]);
    double sum = 0.0;
    for (double v : ts.log_posteriors.row(i)) sum += std::exp(v);
    if (!(std::abs(sum - 1.0) <= tolerance))
      throw DataError("scores: posteriors of " + ts.utt_ids[i] + " do not sum to one");
  }
}

/// Highest-scoring class; ties go to the lowest index.
inline std::size_t ArgMax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j)
    if (row[j] > row[best]) best = j;
  return best;
}

/// Rows are true labels, columns predicted labels.
struct ConfusionMatrix {
  Registry registry;
  Matrix<std::int64_t> counts;

  std::size_t size() const { return counts.rows(); }
  std::int64_t total() const {
    std::int64_t t = 0;
    for (auto v : counts.data()) t += v;
    return t;
  }
  std::int64_t trace() const {
    std::int64_t t = 0;
    for (std::size_t i = 0; i < size(); ++i) t += counts(i, i);
    return t;
  }
  std::int64_t row_sum(std::size_t i) const {
    std::int64_t s = 0;
    for (auto v : counts.row(i)) s += v;
    return s;
  }
  std::int64_t col_sum(std::size_t j) const {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < size(); ++i) s += counts(i, j);
    return s;
  }
};

inline ConfusionMatrix Confusion(const TrialScores &ts) {
  const std::size_t c = ts.num_classes();
  ConfusionMatrix cm{ts.registry, Matrix<std::int64_t>(c, c, 0)};
  for (std::size_t i = 0; i < ts.num_trials(); ++i)
    ++cm.counts(ts.labels[i], ArgMax(ts.log_posteriors.row(i)));
  return cm;
}

/// Percentage of trials on the diagonal.
inline double Accuracy(const ConfusionMatrix &cm) {
  const auto total = cm.total();
  if (total <= 0) throw DataError("accuracy: empty confusion matrix");
  return 100.0 * static_cast<double>(cm.trace()) / static_cast<double>(total);
}

enum class Axis { kRow, kColumn };

/// Row-normalized cells are per-class recall; column-normalized cells are
/// per-class precision. Values are percentages.
inline Matrix<double> Normalize(const ConfusionMatrix &cm, Axis axis) {
  const std::size_t c = cm.size();
  Matrix<double> out(c, c);
  for (std::size_t k = 0; k < c; ++k) {
    const auto sum = axis == Axis::kRow ? cm.row_sum(k) : cm.col_sum(k);
    if (sum == 0)
      throw DataError(std::string("normalize: zero ") + (axis == Axis::kRow ? "row" : "column") +
                      " sum for class " + cm.registry[k].code);
    for (std::size_t o = 0; o < c; ++o) {
      const std::size_t i = axis == Axis::kRow ? k : o;
      const std::size_t j = axis == Axis::kRow ? o : k;
      out(i, j) = 100.0 * static_cast<double>(cm.counts(i, j)) / static_cast<double>(sum);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Average detection cost.

enum class DecisionRule { kArgmax, kThreshold };

struct LreCostParams {
  std::vector<double> p_targets{0.5, 0.1};
  double c_miss = 1.0;
  double c_fa = 1.0;
  DecisionRule rule = DecisionRule::kArgmax;

  void Validate() const {
    if (p_targets.empty()) throw DataError("lre cost: no target priors");
    for (double p : p_targets)
      if (!(p > 0.0 && p < 1.0)) throw DataError("lre cost: priors must lie in (0, 1)");
  }
};

/// accept(n, L) = 1 when trial n is accepted as class L.
using DecisionTable = Matrix<std::uint8_t>;

inline DecisionTable Decide(const TrialScores &ts, DecisionRule rule, double p_target) {
  const std::size_t n = ts.num_trials(), c = ts.num_classes();
  DecisionTable accept(n, c, 0);
  const double threshold = std::log((1.0 - p_target) / p_target);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = ts.log_posteriors.row(i);
    if (rule == DecisionRule::kArgmax) {
      accept(i, ArgMax(row)) = 1;
    } else {
      for (std::size_t l = 0; l < c; ++l) {
        // log-odds = log p - log(1 - p)
        const double log_odds = row[l] - std::log1p(-std::exp(row[l]));
        accept(i, l) = log_odds >= threshold ? 1 : 0;
      }
    }
  }
  return accept;
}

/// C_avg at one target prior:
///   (1/C) sum_L [ c_miss P_t P_miss(L) + c_fa (1-P_t)/(C-1) sum_{L' != L} P_fa(L, L') ]
/// where P_miss(L) is the fraction of class-L trials not accepted as L and
/// P_fa(L, L') the fraction of class-L' trials accepted as L.
inline double AverageCost(const DecisionTable &accept, std::span<const std::size_t> labels,
                          std::size_t num_classes, double p_target, double c_miss = 1.0,
                          double c_fa = 1.0) {
  const std::size_t c = num_classes;
  if (c < 2) throw DataError("lre cost: need at least two classes");
  if (accept.rows() != labels.size() || accept.cols() != c)
    throw DataError("lre cost: decision table shape mismatch");
  std::vector<double> trials(c, 0.0);
  Matrix<double> accepted(c, c, 0.0);  // accepted(L, L') = # true-L' trials accepted as L
  for (std::size_t i = 0; i < labels.size(); ++i) {
    trials[labels[i]] += 1.0;
    for (std::size_t l = 0; l < c; ++l)
      if (accept(i, l)) accepted(l, labels[i]) += 1.0;
  }
  for (std::size_t l = 0; l < c; ++l)
    if (trials[l] == 0.0) throw DataError("lre cost: no trials for class index " + std::to_string(l));

  const double fa_weight = c_fa * (1.0 - p_target) / static_cast<double>(c - 1);
  double cost = 0.0;
  for (std::size_t l = 0; l < c; ++l) {
    const double p_miss = 1.0 - accepted(l, l) / trials[l];
    double fa = 0.0;
    for (std::size_t o = 0; o < c; ++o)
      if (o != l) fa += accepted(l, o) / trials[o];
    cost += c_miss * p_target * p_miss + fa_weight * fa;
  }
  return cost / static_cast<double>(c);
}

/// Mean of C_avg over the configured target priors.
inline double LreCost(const TrialScores &ts, const LreCostParams &p = {}) {
  p.Validate();
  if (ts.registry.size() != 0) {
    for (std::size_t l = 0; l < ts.num_classes(); ++l) {
      bool any = false;
      for (auto lab : ts.labels) any |= lab == l;
      if (!any) throw DataError("lre cost: no trials for class " + ts.registry[l].code);
    }
  }
  double sum = 0.0;
  for (double pt : p.p_targets)
    sum += AverageCost(Decide(ts, p.rule, pt), ts.labels, ts.num_classes(), pt, p.c_miss, p.c_fa);
  return sum / static_cast<double>(p.p_targets.size());
}

// ---------------------------------------------------------------------------
// Score file: header "utt_id<TAB>label<TAB>CODE1<TAB>...", one trial per row
// with natural-log posteriors.

inline TrialScores ParseScores(std::string_view text, const std::string &name = "<scores>") {
  TrialScores ts;
  std::size_t pos = 0, line_no = 0;
  bool header = false;
  std::vector<DialectLabel> labels;
  std::vector<std::vector<double>> rows;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = ChompCr(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    auto fields = SplitTabs(line);
    auto fail = [&](const std::string &why) {
      return DataError(name + " line " + std::to_string(line_no) + ": " + why);
    };
    if (!header) {
      if (fields.size() < 4 || fields[0] != "utt_id" || fields[1] != "label")
        throw fail("expected header 'utt_id<TAB>label<TAB>codes...'");
      for (std::size_t j = 2; j < fields.size(); ++j)
        labels.push_back({std::string(fields[j]), std::string(fields[j])});
      ts.registry = Registry(labels);
      header = true;
      continue;
    }
    if (fields.size() != labels.size() + 2)
      throw fail("expected " + std::to_string(labels.size() + 2) + " fields");
    auto label = ts.registry.find(std::string(fields[1]));
    if (!label) throw fail("label '" + std::string(fields[1]) + "' not in score header");
    std::vector<double> row;
    for (std::size_t j = 2; j < fields.size(); ++j) {
      double v;
      auto f = fields[j];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) throw fail("bad score '" + std::string(f) + "'");
      row.push_back(v);
    }
    ts.utt_ids.emplace_back(fields[0]);
    ts.labels.push_back(*label);
    rows.push_back(std::move(row));
  }
  if (!header) throw DataError(name + ": empty score file");
  ts.log_posteriors = Matrix<double>(rows.size(), labels.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), ts.log_posteriors.row(i).begin());
  ValidateScores(ts);
  return ts;
}

inline std::string FormatScores(const TrialScores &ts) {
  std::string out = "utt_id\tlabel";
  for (const auto &l : ts.registry.labels()) out += "\t" + l.code;
  out += '\n';
  char buf[64];
  for (std::size_t i = 0; i < ts.num_trials(); ++i) {
    out += ts.utt_ids[i];
    out += '\t';
    out += ts.registry[ts.labels[i]].code;
    for (double v : ts.log_posteriors.row(i)) {
      auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out += '\t';
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

/// Counts CSV: header "true\predicted,CODE...", then "CODE,count,..." rows.
inline std::string FormatConfusionCsv(const ConfusionMatrix &cm) {
  std::string out = "true\\predicted";
  for (const auto &l : cm.registry.labels()) out += "," + l.code;
  out += '\n';
  for (std::size_t i = 0; i < cm.size(); ++i) {
    out += cm.registry[i].code;
    for (auto v : cm.counts.row(i)) out += "," + std::to_string(v);
    out += '\n';
  }
  return out;
}

inline ConfusionMatrix ParseConfusionCsv(std::string_view text, const std::string &name = "<counts>") {
  std::vector<std::vector<std::string_view>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = ChompCr(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t s = 0;
    while (true) {
      auto c = line.find(',', s);
      fields.push_back(line.substr(s, c == std::string_view::npos ? std::string_view::npos : c - s));
      if (c == std::string_view::npos) break;
      s = c + 1;
    }
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw DataError(name + ": empty confusion matrix");
  const std::size_t c = rows[0].size() - 1;
  if (c < 2 || rows.size() != c + 1) throw DataError(name + ": confusion matrix must be square with a header");
  std::vector<DialectLabel> labels;
  for (std::size_t j = 1; j <= c; ++j) labels.push_back({std::string(rows[0][j]), std::string(rows[0][j])});
  ConfusionMatrix cm{Registry(labels), Matrix<std::int64_t>(c, c, 0)};
  for (std::size_t i = 0; i < c; ++i) {
    const auto &r = rows[i + 1];
    if (r.size() != c + 1 || r[0] != rows[0][i + 1])
      throw DataError(name + ": row " + std::to_string(i + 1) + " does not match header order");
    for (std::size_t j = 0; j < c; ++j) {
      std::int64_t v;
      auto f = r[j + 1];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || v < 0)
        throw DataError(name + ": bad count '" + std::string(f) + "'");
      cm.counts(i, j) = v;
    }
  }
  return cm;
}

/// Heatmap laid out as true-label rows by predicted-label columns. Each cell
/// shows its count; diagonal cells add the normalized percentage. Cell shade
/// is the normalized percentage.
inline std::string RenderConfusionSvg(const ConfusionMatrix &cm, Axis axis) {
  const auto pct = Normalize(cm, axis);
  const std::size_t c = cm.size();
  const int cell = 60, left = 90, top = 30;
  const int width = left + static_cast<int>(c) * cell + 20;
  const int height = top + static_cast<int>(c) * cell + 80;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t i = 0; i < c; ++i) {
    const int y = top + static_cast<int>(i) * cell;
    os << "  <text x=\"" << left - 8 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"end\">"
       << cm.registry[i].code << "</text>\n";
    for (std::size_t j = 0; j < c; ++j) {
      const int x = left + static_cast<int>(j) * cell;
      const long p = std::lround(pct(i, j));
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - static_cast<double>(p) / 100.0)));
      const char *ink = p < 50 ? "black" : "white";
      os << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
         << "\" fill=\"rgb(" << shade << ',' << shade << ',' << shade << ")\" stroke=\"black\"/>\n";
      os << "  <text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + (i == j ? -2 : 4)
         << "\" text-anchor=\"middle\" fill=\"" << ink << "\">" << cm.counts(i, j) << "</text>\n";
      if (i == j)
        os << "  <text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 13
           << "\" text-anchor=\"middle\" fill=\"" << ink << "\">(" << p << "%)</text>\n";
    }
  }
  const int bottom = top + static_cast<int>(c) * cell;
  for (std::size_t j = 0; j < c; ++j)
    os << "  <text x=\"" << left + static_cast<int>(j) * cell + cell / 2 << "\" y=\"" << bottom + 18
       << "\" text-anchor=\"middle\">" << cm.registry[j].code << "</text>\n";
  os << "  <text x=\"" << left + static_cast<int>(c) * cell / 2 << "\" y=\"" << bottom + 45
     << "\" text-anchor=\"middle\">Predicted Label</text>\n";
  os << "  <text transform=\"translate(16," << top + static_cast<int>(c) * cell / 2
     << ") rotate(-90)\" text-anchor=\"middle\">True Label</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace dialect_bench

#endif  // DIALECT_BENCH_METRICS_ADI_HPP_
