// tests/test_metrics_adi.cpp

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

#include <gtest/gtest.h>

#include <numeric>

#include "dialect_bench/metrics_adi.hpp"
#include "test_util.hpp"

namespace dialect_bench {
namespace {

using namespace dialect_bench::testing;

TrialScores ScoresFromPosteriors(const std::vector<std::vector<double>> &posteriors,
                                 const std::vector<std::size_t> &labels, const std::vector<std::string> &codes) {
  TrialScores ts;
  ts.registry = RegistryOf(codes);
  ts.labels = labels;
  ts.log_posteriors = Matrix<double>(labels.size(), codes.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ts.utt_ids.push_back("t" + std::to_string(i));
    for (std::size_t j = 0; j < codes.size(); ++j) ts.log_posteriors(i, j) = std::log(posteriors[i][j]);
  }
  return ts;
}

TrialScores RandomScores(std::size_t n, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::gamma_distribution<double> g(0.7, 1.0);
  std::vector<std::vector<double>> post(n, std::vector<double>(c));
  std::vector<std::size_t> labels(n);
  std::vector<std::string> codes;
  const Registry known = KnownDialects();
  const auto &all = known.labels();
  for (std::size_t j = 0; j < c; ++j) codes.push_back(all[j].code);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = i % c;  // every class has trials
    double s = 0.0;
    for (auto &v : post[i]) s += (v = g(gen) + 1e-9);
    for (auto &v : post[i]) v /= s;
  }
  return ScoresFromPosteriors(post, labels, codes);
}

// Direct evaluation of the average detection cost, written out trial by trial.
double CostOracle(const DecisionTable &accept, const std::vector<std::size_t> &labels, std::size_t c,
                  double pt) {
  double total = 0.0;
  for (std::size_t target = 0; target < c; ++target) {
    double n_target = 0, missed = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == target) {
        ++n_target;
        if (!accept(i, target)) ++missed;
      }
    double fa_sum = 0.0;
    for (std::size_t non = 0; non < c; ++non) {
      if (non == target) continue;
      double n_non = 0, fa = 0;
      for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == non) {
          ++n_non;
          if (accept(i, target)) ++fa;
        }
      fa_sum += fa / n_non;
    }
    total += pt * missed / n_target + (1.0 - pt) / static_cast<double>(c - 1) * fa_sum;
  }
  return total / static_cast<double>(c);
}

TEST(Confusion, ReferenceMatrixAccuracy) {
  const auto &raw = ReferenceConfusion();
  std::int64_t diag = 0, total = 0;
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      total += raw[i][j];
      if (i == j) diag += raw[i][j];
    }
  ASSERT_EQ(diag, 12456);
  ASSERT_EQ(total, 12700);
  const auto cm = ReferenceConfusionMatrix();
  EXPECT_EQ(cm.total(), 12700);
  EXPECT_EQ(cm.trace(), 12456);
  EXPECT_DOUBLE_EQ(Accuracy(cm), 100.0 * 12456.0 / 12700.0);
  EXPECT_EQ(Fixed2(Accuracy(cm)), "98.08");
}

TEST(Confusion, ColumnAndRowNormalizationOfFirstClass) {
  const auto cm = ReferenceConfusionMatrix();
  std::int64_t col = 0;
  for (std::size_t i = 0; i < 8; ++i) col += ReferenceConfusion()[i][0];
  const auto &row = ReferenceConfusion()[0];
  const std::int64_t row_sum = std::accumulate(row.begin(), row.end(), std::int64_t{0});
  ASSERT_EQ(col, 1622);
  ASSERT_EQ(row_sum, 1590);
  const auto by_col = Normalize(cm, Axis::kColumn), by_row = Normalize(cm, Axis::kRow);
  EXPECT_DOUBLE_EQ(by_col(0, 0), 100.0 * 1563.0 / 1622.0);
  EXPECT_DOUBLE_EQ(by_row(0, 0), 100.0 * 1563.0 / 1590.0);
  EXPECT_EQ(std::lround(by_col(0, 0)), 96);
  EXPECT_EQ(Fixed2(by_row(0, 0)).substr(0, 4), "98.3");
  // MOR utterances labelled ALG, as a share of the MOR row.
  EXPECT_EQ(cm.row_sum(4), 1592);
  EXPECT_NEAR(by_row(4, 0), 1.884, 5e-4);
}

TEST(Confusion, NormalizedAxesSumToHundred) {
  const auto cm = ReferenceConfusionMatrix();
  const auto r = Normalize(cm, Axis::kRow), c = Normalize(cm, Axis::kColumn);
  for (std::size_t k = 0; k < 8; ++k) {
    double rs = 0.0, cs = 0.0;
    for (std::size_t o = 0; o < 8; ++o) {
      rs += r(k, o);
      cs += c(o, k);
    }
    EXPECT_NEAR(rs, 100.0, 1e-9);
    EXPECT_NEAR(cs, 100.0, 1e-9);
  }
}

TEST(Confusion, SmallHandExample) {
  ConfusionMatrix cm;
  cm.registry = RegistryOf({"EGY", "JOR"});
  cm.counts = Matrix<std::int64_t>(2, 2);
  cm.counts(0, 0) = 1;
  cm.counts(0, 1) = 1;
  cm.counts(1, 1) = 2;
  const auto r = Normalize(cm, Axis::kRow);
  EXPECT_DOUBLE_EQ(r(0, 0), 50.0);
  EXPECT_DOUBLE_EQ(r(0, 1), 50.0);
  EXPECT_DOUBLE_EQ(r(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(r(1, 1), 100.0);
  EXPECT_DOUBLE_EQ(Accuracy(cm), 75.0);
}

TEST(Confusion, ZeroAxisSumNamesTheClass) {
  ConfusionMatrix cm;
  cm.registry = RegistryOf({"EGY", "JOR"});
  cm.counts = Matrix<std::int64_t>(2, 2);
  cm.counts(0, 0) = 3;
  try {
    Normalize(cm, Axis::kRow);
    FAIL();
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("JOR"), std::string::npos) << e.what();
  }
  EXPECT_THROW(Normalize(cm, Axis::kColumn), Error);
  EXPECT_THROW(Accuracy(ConfusionMatrix{RegistryOf({"EGY", "JOR"}), Matrix<std::int64_t>(2, 2)}), Error);
}

TEST(Confusion, TiesGoToLowestIndex) {
  EXPECT_EQ(ArgMax(std::vector<double>{0.5, 0.5}), 0u);
  EXPECT_EQ(ArgMax(std::vector<double>{0.1, 0.45, 0.45}), 1u);
  const auto ts = ScoresFromPosteriors({{0.5, 0.5}, {0.5, 0.5}}, {0, 1}, {"EGY", "JOR"});
  const auto cm = Confusion(ts);
  EXPECT_EQ(cm.counts(0, 0), 1);
  EXPECT_EQ(cm.counts(1, 0), 1);
}

TEST(Confusion, AccuracyMatchesDirectCount) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ts = RandomScores(60, 2 + seed % 7, seed);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ts.num_trials(); ++i) {
      std::size_t best = 0;
      for (std::size_t j = 0; j < ts.num_classes(); ++j)
        if (ts.log_posteriors(i, j) > ts.log_posteriors(i, best)) best = j;
      correct += best == ts.labels[i];
    }
    EXPECT_DOUBLE_EQ(Accuracy(Confusion(ts)), 100.0 * static_cast<double>(correct) / 60.0);
  }
}

TEST(Confusion, InvariantUnderMonotoneScoreTransform) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ts = RandomScores(40, 5, seed);
    auto warped = ts;
    for (auto &v : warped.log_posteriors.data()) v = 3.0 * v + std::tanh(v) - 7.0;
    EXPECT_EQ(Confusion(ts).counts, Confusion(warped).counts);
  }
}

TEST(Confusion, TrialOrderDoesNotMatter) {
  const auto ts = RandomScores(50, 6, 3);
  std::vector<std::size_t> perm(50);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 gen(4);
  std::shuffle(perm.begin(), perm.end(), gen);
  auto shuffled = ts;
  for (std::size_t i = 0; i < 50; ++i) {
    shuffled.labels[i] = ts.labels[perm[i]];
    shuffled.utt_ids[i] = ts.utt_ids[perm[i]];
    for (std::size_t j = 0; j < 6; ++j) shuffled.log_posteriors(i, j) = ts.log_posteriors(perm[i], j);
  }
  EXPECT_EQ(Confusion(ts).counts, Confusion(shuffled).counts);
  EXPECT_DOUBLE_EQ(LreCost(ts), LreCost(shuffled));
}

TEST(LreCost, PerfectScoresCostNothing) {
  const auto ts = ScoresFromPosteriors({{0.9, 0.05, 0.05}, {0.1, 0.8, 0.1}, {0.2, 0.2, 0.6}}, {0, 1, 2},
                                       {"EGY", "JOR", "PAL"});
  EXPECT_EQ(LreCost(ts), 0.0);
}

TEST(LreCost, AcceptEverythingCostsPointSeven) {
  const std::vector<std::size_t> labels{0, 1, 2, 3, 0, 1, 2, 3};
  const DecisionTable all(labels.size(), 4, 1);
  double mean = 0.0;
  for (double pt : {0.5, 0.1}) {
    const double c = AverageCost(all, labels, 4, pt);
    EXPECT_NEAR(c, 1.0 - pt, 1e-15);
    EXPECT_NEAR(c, CostOracle(all, labels, 4, pt), 1e-15);
    mean += c / 2.0;
  }
  EXPECT_NEAR(mean, 0.7, 1e-15);
}

TEST(LreCost, ThresholdRuleOnUniformPosteriors) {
  // Uniform two-class posteriors sit exactly on the threshold at Pt = 0.5.
  const auto ts = ScoresFromPosteriors({{0.5, 0.5}, {0.5, 0.5}}, {0, 1}, {"EGY", "JOR"});
  const auto at_half = Decide(ts, DecisionRule::kThreshold, 0.5);
  for (auto v : at_half.data()) EXPECT_EQ(v, 1);
  const auto at_tenth = Decide(ts, DecisionRule::kThreshold, 0.1);
  for (auto v : at_tenth.data()) EXPECT_EQ(v, 0);
  LreCostParams p;
  p.rule = DecisionRule::kThreshold;
  // 0.5 (accept all at Pt = 0.5) and 0.1 (reject all at Pt = 0.1).
  EXPECT_NEAR(LreCost(ts, p), 0.3, 1e-15);
}

TEST(LreCost, TwoClassHandCase) {
  // Every trial is decided as class 0: class 1 is always missed, class 1
  // trials are always false alarms for class 0.
  const auto ts = ScoresFromPosteriors({{0.7, 0.3}, {0.6, 0.4}, {0.9, 0.1}, {0.55, 0.45}}, {0, 0, 1, 1},
                                       {"EGY", "JOR"});
  EXPECT_NEAR(AverageCost(Decide(ts, DecisionRule::kArgmax, 0.5), ts.labels, 2, 0.5), 0.5, 1e-15);
  EXPECT_NEAR(AverageCost(Decide(ts, DecisionRule::kArgmax, 0.1), ts.labels, 2, 0.1), 0.5, 1e-15);
  EXPECT_NEAR(LreCost(ts), 0.5, 1e-15);
}

TEST(LreCost, MatchesDirectOracle) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto ts = RandomScores(45, 2 + seed % 8, seed + 100);
    for (auto rule : {DecisionRule::kArgmax, DecisionRule::kThreshold})
      for (double pt : {0.5, 0.1, 0.3}) {
        const auto acc = Decide(ts, rule, pt);
        EXPECT_NEAR(AverageCost(acc, ts.labels, ts.num_classes(), pt),
                    CostOracle(acc, ts.labels, ts.num_classes(), pt), 1e-12);
      }
  }
}

TEST(LreCost, BoundsAndMissingClass) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ts = RandomScores(30, 3, seed);
    const double c = LreCost(ts);
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1.0);
  }
  auto ts = ScoresFromPosteriors({{0.7, 0.3}, {0.6, 0.4}}, {0, 0}, {"EGY", "JOR"});
  try {
    LreCost(ts);
    FAIL();
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("JOR"), std::string::npos);
  }
}

TEST(ScoreFile, RoundTripAndValidation) {
  const auto ts = RandomScores(25, 4, 9);
  const auto text = FormatScores(ts);
  const auto back = ParseScores(text);
  EXPECT_EQ(back.utt_ids, ts.utt_ids);
  EXPECT_EQ(back.labels, ts.labels);
  EXPECT_EQ(back.registry, ts.registry);
  EXPECT_EQ(back.log_posteriors, ts.log_posteriors);
  EXPECT_NO_THROW(ValidateScores(back));
  EXPECT_EQ(FormatScores(back), text);
  EXPECT_THROW(ParseScores(""), Error);
  EXPECT_THROW(ParseScores("utt_id\tlabel\tEGY\tJOR\nu1\tPAL\t-0.1\t-2.3\n"), Error);
  EXPECT_THROW(ParseScores("utt_id\tlabel\tEGY\tJOR\nu1\tEGY\tx\t-2.3\n"), Error);
  EXPECT_THROW(ParseScores("utt_id\tlabel\tEGY\tJOR\nu1\tEGY\t-0.1\n"), Error);
  auto bad = ts;
  bad.log_posteriors(0, 0) += 1.0;
  EXPECT_THROW(ValidateScores(bad), Error);
}

TEST(ConfusionCsv, RoundTrip) {
  const auto cm = ParseConfusionCsv(ReferenceConfusionCsv());
  EXPECT_EQ(cm.counts, ReferenceConfusionMatrix().counts);
  EXPECT_EQ(cm.registry, ReferenceConfusionMatrix().registry);
  EXPECT_EQ(FormatConfusionCsv(cm), ReferenceConfusionCsv());
  EXPECT_THROW(ParseConfusionCsv("true\\predicted,EGY,JOR\nEGY,1,2\n"), Error);
  EXPECT_THROW(ParseConfusionCsv("true\\predicted,EGY,JOR\nJOR,1,2\nEGY,3,4\n"), Error);
  EXPECT_THROW(ParseConfusionCsv("true\\predicted,EGY,JOR\nEGY,1,-2\nJOR,3,4\n"), Error);
}

TEST(ConfusionSvg, CarriesCountsAndPercentages) {
  const auto cm = ReferenceConfusionMatrix();
  const auto svg = RenderConfusionSvg(cm, Axis::kColumn);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find(">1563</text>"), std::string::npos);
  EXPECT_NE(svg.find(">(96%)</text>"), std::string::npos);
  EXPECT_NE(svg.find(">30</text>"), std::string::npos);
  EXPECT_NE(svg.find("Predicted Label"), std::string::npos);
  EXPECT_NE(RenderConfusionSvg(cm, Axis::kRow).find(">(98%)</text>"), std::string::npos);
}

}  // namespace
}  // namespace dialect_bench
