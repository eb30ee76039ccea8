// dialect_bench/trainer.hpp

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

#ifndef DIALECT_BENCH_TRAINER_HPP_
#define DIALECT_BENCH_TRAINER_HPP_

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dialect_bench/common.hpp"
#include "dialect_bench/corpus.hpp"
#include "dialect_bench/embedio.hpp"
#include "dialect_bench/head.hpp"
#include "dialect_bench/parallel.hpp"

namespace dialect_bench {

enum class MetricDirection { kHigherIsBetter, kLowerIsBetter };

struct TrainConfig {
  double lr_group_low = 1e-5;
  double lr_group_high = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int max_epochs = 100;
  double newbob_factor = 0.5;
  double newbob_threshold = 0.0025;
  int patience = 10;
  int batch_size = 8;
  std::uint64_t seed = 0;
  double smoothing = 0.0;
  std::size_t attention_dim = 128;
  Pooling pooling = Pooling::kMeanStd;
  bool adapter = false;
  std::size_t jobs = 1;  // per-utterance gradient workers; reduction order is fixed

  void Validate() const {
    if (!(lr_group_low >= 0.0) || !(lr_group_high >= 0.0))
      throw DataError("train: learning rates must be non-negative");
    if (!(newbob_factor > 0.0 && newbob_factor < 1.0))
      throw DataError("train: newbob factor must lie in (0, 1)");
    if (patience < 1) throw DataError("train: patience must be >= 1");
    if (max_epochs < 1) throw DataError("train: max_epochs must be >= 1");
    if (batch_size < 1) throw DataError("train: batch_size must be >= 1");
    if (!(smoothing >= 0.0 && smoothing < 1.0)) throw DataError("train: smoothing must lie in [0, 1)");
  }
};

struct LearningRates {
  double low = 0.0;
  double high = 0.0;
  double For(LrGroup g) const { return g == LrGroup::kLow ? low : high; }
  bool operator==(const LearningRates &) const = default;
};

struct AdamMoments {
  HeadParameters<float> m;
  HeadParameters<float> v;
  std::uint64_t step = 0;
};

inline AdamMoments ZeroMoments(const HeadConfig &cfg) {
  return {HeadParameters<float>(cfg), HeadParameters<float>(cfg), 0};
}

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update. Gradients are checked before anything is
/// touched, so a non-finite gradient leaves parameters and moments intact.
inline void AdamStep(HeadParameters<float> &params, AdamMoments &moments,
                     const HeadParameters<double> &grads, const LearningRates &lrs,
                     const AdamHyper &hyper = {}) {
  if (!(grads.config == params.config)) throw DataError("adam: gradient shape mismatch");
  grads.ForEachTensor([](const char *name, std::span<const double> g, LrGroup) {
    for (double x : g)
      if (!std::isfinite(x)) throw NumericError(std::string("adam: non-finite gradient in ") + name);
  });

  const std::uint64_t t = moments.step + 1;
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));

  std::vector<std::span<float>> ms, vs;
  moments.m.ForEachTensor([&](const char *, std::span<float> x, LrGroup) { ms.push_back(x); });
  moments.v.ForEachTensor([&](const char *, std::span<float> x, LrGroup) { vs.push_back(x); });
  std::vector<std::span<const double>> gs;
  grads.ForEachTensor([&](const char *, std::span<const double> x, LrGroup) { gs.push_back(x); });

  std::size_t k = 0;
  params.ForEachTensor([&](const char *, std::span<float> p, LrGroup group) {
    const double lr = lrs.For(group);
    auto m = ms[k], v = vs[k];
    auto g = gs[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double mi = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
      const double vi = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double update = lr * (mi / c1) / (std::sqrt(vi / c2) + hyper.eps);
      p[i] = static_cast<float>(static_cast<double>(p[i]) - update);
    }
    ++k;
  });
  moments.step = t;
}

/// NewBob annealing: whenever the relative improvement over the best value
/// seen so far is below the threshold, every group rate is multiplied by the
/// factor. The first observation only sets the reference.
class NewBob {
 public:
  NewBob(double factor, double threshold,
         MetricDirection direction = MetricDirection::kHigherIsBetter)
      : factor_(factor), threshold_(threshold), direction_(direction) {}

  /// Returns true when the rates were annealed.
  bool Update(double metric, LearningRates &lrs) {
    if (!best_) {
      best_ = metric;
      return false;
    }
    const double gain = direction_ == MetricDirection::kHigherIsBetter ? metric - *best_ : *best_ - metric;
    double relative;
    if (*best_ != 0.0)
      relative = gain / std::abs(*best_);
    else
      relative = gain > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    if (gain > 0.0) best_ = metric;
    if (relative < threshold_) {
      lrs.low *= factor_;
      lrs.high *= factor_;
      return true;
    }
    return false;
  }

  std::optional<double> best() const { return best_; }
  void set_best(std::optional<double> b) { best_ = b; }

 private:
  double factor_;
  double threshold_;
  MetricDirection direction_;
  std::optional<double> best_;
};

struct TrainState {
  HeadParameters<float> params;
  Registry registry;
  AdamMoments moments;
  int epoch = 0;
  LearningRates lrs;
  double best_val_metric = -std::numeric_limits<double>::infinity();
  int epochs_since_improvement = 0;
  std::uint64_t seed = 0;
};

inline TrainState InitialState(const Registry &registry, std::size_t dim, const TrainConfig &cfg) {
  HeadConfig hc;
  hc.dim = dim;
  hc.attention_dim = cfg.attention_dim;
  hc.num_classes = registry.size();
  hc.pooling = cfg.pooling;
  hc.adapter = cfg.adapter;
  TrainState s;
  s.params = InitHead(hc, cfg.seed);
  s.registry = registry;
  s.moments = ZeroMoments(hc);
  s.lrs = {cfg.lr_group_low, cfg.lr_group_high};
  s.seed = cfg.seed;
  return s;
}

// Checkpoint: HEAD block followed by
//   "ADAM" | step u64 | epoch u32 | lr_low f64 | lr_high f64 | best f64
//   | epochs_since_improvement u32 | seed u64 | m tensors | v tensors

inline std::string EncodeTrainState(const TrainState &s) {
  std::string out;
  EncodeHeadTo(out, s.params, s.registry);
  auto put_u64 = [&](std::uint64_t v) {
    le::PutU32(out, static_cast<std::uint32_t>(v));
    le::PutU32(out, static_cast<std::uint32_t>(v >> 32));
  };
  out += "ADAM";
  put_u64(s.moments.step);
  le::PutU32(out, static_cast<std::uint32_t>(s.epoch));
  put_u64(std::bit_cast<std::uint64_t>(s.lrs.low));
  put_u64(std::bit_cast<std::uint64_t>(s.lrs.high));
  put_u64(std::bit_cast<std::uint64_t>(s.best_val_metric));
  le::PutU32(out, static_cast<std::uint32_t>(s.epochs_since_improvement));
  put_u64(s.seed);
  for (const auto *moment : {&s.moments.m, &s.moments.v})
    moment->ForEachTensor([&](const char *, std::span<const float> v, LrGroup) {
      for (float x : v) le::PutF32(out, x);
    });
  return out;
}

inline TrainState DecodeTrainState(std::string_view bytes, const std::string &name = "<memory>") {
  ByteReader in(bytes, name);
  auto head = DecodeHeadFrom(in);
  TrainState s;
  s.params = std::move(head.params);
  s.registry = std::move(head.registry);
  if (in.Take(4) != "ADAM") throw DataError(name + ": missing optimizer section");
  s.moments = ZeroMoments(s.params.config);
  s.moments.step = in.U64();
  s.epoch = static_cast<int>(in.U32());
  s.lrs.low = in.F64();
  s.lrs.high = in.F64();
  s.best_val_metric = in.F64();
  s.epochs_since_improvement = static_cast<int>(in.U32());
  s.seed = in.U64();
  for (auto *moment : {&s.moments.m, &s.moments.v})
    moment->ForEachTensor([&](const char *, std::span<float> v, LrGroup) {
      for (auto &x : v) x = in.F32();
    });
  if (!in.AtEnd()) throw DataError(name + ": trailing bytes");
  return s;
}

struct EpochRecord {
  int stage = 1;
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  LearningRates lrs;  // rates in effect during the epoch
};

struct FitResult {
  TrainState state;  // best-validation checkpoint
  std::vector<EpochRecord> log;
  int epochs_run = 0;
};

/// A labelled utterance resolved against a registry.
struct Example {
  const EmbeddingSequence *embedding;
  std::size_t label;
  std::string code;
};

inline std::vector<Example> ResolveExamples(const Manifest &m, Split split, const Registry &registry,
                                            FeatureStore &features, bool require_label = true) {
  std::vector<Example> out;
  for (const auto &r : m.records) {
    if (r.split != split) continue;
    auto idx = registry.find(r.dialect);
    if (!idx && require_label)
      throw DataError("dialect " + r.dialect + " of " + r.utt_id + " not in model registry");
    out.push_back({&features.Get(r.utt_id), idx.value_or(0), r.dialect});
  }
  return out;
}

struct Evaluation {
  double loss = 0.0;      // mean NLL (labels resolvable in the model registry only)
  double accuracy = 0.0;  // percent, predicted code == true code
};

inline Evaluation Evaluate(const HeadParameters<float> &params, const Registry &model_registry,
                           const std::vector<Example> &examples, double smoothing = 0.0) {
  Evaluation ev;
  if (examples.empty()) return ev;
  std::size_t correct = 0, scored = 0;
  for (const auto &ex : examples) {
    const auto out = Forward(params, ex.embedding->frames);
    const auto pred = static_cast<std::size_t>(
        std::max_element(out.log_probs.begin(), out.log_probs.end()) - out.log_probs.begin());
    if (model_registry[pred].code == ex.code) ++correct;
    if (auto idx = model_registry.find(ex.code)) {
      ev.loss += NllLoss(out, *idx, smoothing).loss;
      ++scored;
    }
  }
  if (scored) ev.loss /= static_cast<double>(scored);
  ev.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(examples.size());
  return ev;
}

struct FitOptions {
  Split train_split = Split::kTrain;
  Split val_split = Split::kValidation;
  int stage = 1;
};

/// Mini-batch Adam with NewBob annealing and early stopping on validation
/// accuracy. Returns the best-validation state, not the last one.
inline FitResult Fit(const Manifest &manifest, FeatureStore &features, const TrainConfig &cfg,
                     std::optional<TrainState> init = std::nullopt, const FitOptions &opt = {}) {
  cfg.Validate();
  const Registry registry = init ? init->registry : manifest.registry;
  auto train = ResolveExamples(manifest, opt.train_split, registry, features);
  auto val = ResolveExamples(manifest, opt.val_split, registry, features, false);
  if (train.empty()) throw DataError(std::string("train: empty ") + SplitName(opt.train_split) + " split");
  if (val.empty()) throw DataError(std::string("train: empty ") + SplitName(opt.val_split) + " split");

  const std::size_t dim = train.front().embedding->dim();
  TrainState state = init ? std::move(*init) : InitialState(registry, dim, cfg);
  if (state.params.config.dim != dim) throw DataError("train: feature dim does not match model");

  const AdamHyper hyper{cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  NewBob newbob(cfg.newbob_factor, cfg.newbob_threshold);
  if (std::isfinite(state.best_val_metric)) newbob.set_best(state.best_val_metric);

  FitResult result;
  result.state = state;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const int first_epoch = state.epoch + 1;
  for (int epoch = first_epoch; epoch < first_epoch + cfg.max_epochs; ++epoch) {
    Rng rng(state.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(epoch)));
    rng.Shuffle(order);
    const LearningRates epoch_lrs = state.lrs;

    double loss_sum = 0.0;
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    std::vector<HeadGradients> slots(batch);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t n = std::min(batch, order.size() - start);
      ParallelFor(n, cfg.jobs, [&](std::size_t i) {
        const auto &ex = train[order[start + i]];
        slots[i] = Backward(state.params, ex.embedding->frames, ex.label, cfg.smoothing);
      });
      HeadParameters<double> sum(state.params.config);
      std::vector<std::span<double>> dst;
      sum.ForEachTensor([&](const char *, std::span<double> v, LrGroup) { dst.push_back(v); });
      for (std::size_t i = 0; i < n; ++i) {
        loss_sum += slots[i].loss;
        std::size_t k = 0;
        slots[i].grads.ForEachTensor([&](const char *, std::span<const double> g, LrGroup) {
          for (std::size_t j = 0; j < g.size(); ++j) dst[k][j] += g[j] / static_cast<double>(n);
          ++k;
        });
      }
      AdamStep(state.params, state.moments, sum, state.lrs, hyper);
    }

    const auto ev = Evaluate(state.params, registry, val, cfg.smoothing);
    state.epoch = epoch;
    newbob.Update(ev.accuracy, state.lrs);
    if (ev.accuracy > state.best_val_metric) {
      state.best_val_metric = ev.accuracy;
      state.epochs_since_improvement = 0;
      result.state = state;
    } else {
      ++state.epochs_since_improvement;
    }
    result.log.push_back({opt.stage, epoch, loss_sum / static_cast<double>(train.size()), ev.loss,
                          ev.accuracy, epoch_lrs});
    ++result.epochs_run;
    if (state.epochs_since_improvement >= cfg.patience) break;
  }
  return result;
}

struct TwoStageResult {
  FitResult stage1;
  std::optional<FitResult> stage2;
  double zero_shot_accuracy = 0.0;  // stage-1 model on the stage-2 validation split
  std::vector<std::string> warnings;

  const TrainState &final_state() const { return stage2 ? stage2->state : stage1.state; }
  std::vector<EpochRecord> log() const {
    auto out = stage1.log;
    if (stage2) out.insert(out.end(), stage2->log.begin(), stage2->log.end());
    return out;
  }
};

/// Stage 1 trains on the base manifest's train split. Stage 2 continues from
/// the stage-1 checkpoint on the adaptation manifest (its adaptation split, or
/// its train split when there is none). When the label registries differ the
/// output layer is re-initialized for the stage-2 registry and only the
/// adapter and attention parameters carry over. Optimizer moments, rates and
/// the early-stopping reference restart at the stage boundary.
inline TwoStageResult TwoStage(const Manifest &base, const Manifest &adapt, FeatureStore &features,
                               const TrainConfig &cfg) {
  TwoStageResult result;
  result.stage1 = Fit(base, features, cfg, std::nullopt, {Split::kTrain, Split::kValidation, 1});

  const Split adapt_split = adapt.has_split(Split::kAdaptation) ? Split::kAdaptation : Split::kTrain;
  if (!adapt.has_split(adapt_split)) {
    result.warnings.push_back("adaptation set is empty; returning the stage-1 model");
    return result;
  }

  const TrainState &s1 = result.stage1.state;
  const auto val = ResolveExamples(adapt, Split::kValidation, s1.registry, features, false);
  result.zero_shot_accuracy = Evaluate(s1.params, s1.registry, val).accuracy;

  TrainState init;
  if (adapt.registry == s1.registry) {
    init.params = s1.params;
  } else {
    init.params = ReplaceClassifier(s1.params, adapt.registry.size(), cfg.seed ^ 0x5354414745320000ULL);
  }
  init.registry = adapt.registry;
  init.moments = ZeroMoments(init.params.config);
  init.lrs = {cfg.lr_group_low, cfg.lr_group_high};
  init.seed = cfg.seed;
  result.stage2 = Fit(adapt, features, cfg, std::move(init), {adapt_split, Split::kValidation, 2});
  return result;
}

/// Epoch log: one line per epoch, "epoch,split,loss,accuracy,lr_low,lr_high",
/// reporting the validation split. Stage 2 epochs continue the numbering of
/// the file they are written to.
inline std::string FormatEpochLog(const std::vector<EpochRecord> &log) {
  std::ostringstream os;
  os.precision(17);
  for (const auto &r : log)
    os << r.epoch << ",validation," << r.val_loss << ',' << r.val_accuracy << ',' << r.lrs.low << ','
       << r.lrs.high << '\n';
  return os.str();
}

}  // namespace dialect_bench

#endif  // DIALECT_BENCH_TRAINER_HPP_
