// tools/cli_commands.hpp

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

// Subcommand implementations of the dialect-bench tool. RunCli() takes the
// argument list and two streams so the whole surface can be driven in-process.

#ifndef DIALECT_BENCH_TOOLS_CLI_COMMANDS_HPP_
#define DIALECT_BENCH_TOOLS_CLI_COMMANDS_HPP_

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dialect_bench/augment.hpp"
#include "dialect_bench/config.hpp"
#include "dialect_bench/corpus.hpp"
#include "dialect_bench/dsp.hpp"
#include "dialect_bench/embedio.hpp"
#include "dialect_bench/head.hpp"
#include "dialect_bench/metrics_adi.hpp"
#include "dialect_bench/metrics_asr.hpp"
#include "dialect_bench/parallel.hpp"
#include "dialect_bench/trainer.hpp"

namespace dialect_bench::cli {

namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kDataFailure = 2, kUsageFailure = 64, kInternalFailure = 70 };

struct Io {
  std::ostream &out;
  std::ostream &err;
};

namespace detail {

inline std::string Fixed(double v, int digits = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline void EnsureDir(const std::string &dir) {
  if (dir.empty()) throw DataError("--out-dir is required");
  fs::create_directories(dir);
}

inline std::string Under(const std::string &dir, const std::string &name) {
  return (fs::path(dir) / name).string();
}

/// Relative audio paths are taken relative to the manifest's directory.
inline std::string ResolveAudio(const std::string &manifest_path, const std::string &audio) {
  const fs::path p(audio);
  if (p.is_absolute()) return audio;
  return (fs::path(manifest_path).parent_path() / p).string();
}

inline Split SplitArg(const std::string &name) {
  auto s = ParseSplit(name);
  if (!s) throw DataError("unknown split '" + name + "'");
  return *s;
}

inline ExperimentConfig LoadOptionalConfig(const std::string &path) {
  return path.empty() ? ExperimentConfig{} : LoadConfig(path);
}

inline Waveform LoadAudioAt(const std::string &path, int rate) {
  Waveform w = ReadWav(path);
  return w.sample_rate_hz == rate ? w : Resample(w, rate);
}

inline EmbeddingSequence ToEmbedding(const std::string &utt_id, MelSpectrogram mel) {
  return {utt_id, std::move(mel.frames)};
}

/// Noise list: a manifest (tab-separated) or one WAV path per line.
inline std::vector<Waveform> LoadNoisePool(const std::string &path, int rate) {
  std::vector<Waveform> pool;
  if (path.empty()) return pool;
  const std::string text = ReadFileBytes(path);
  if (text.find('\t') != std::string::npos) {
    for (const auto &r : ParseManifest(text).records) pool.push_back(LoadAudioAt(ResolveAudio(path, r.audio_path), rate));
    return pool;
  }
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    line = std::string(ChompCr(line));
    if (!line.empty()) pool.push_back(LoadAudioAt(ResolveAudio(path, line), rate));
  }
  return pool;
}

struct BatchTask {
  std::string utt_id;
  std::string audio;
  std::uint64_t seed = 0;
  bool augmented = false;
};

struct BatchOutcome {
  bool written = false;
  bool skipped = false;
  std::string error;
  double duration_s = 0.0;
};

/// Writes one FEMB file per task; per-task failures are reported, not thrown.
inline std::vector<BatchOutcome> RunBatch(const std::vector<BatchTask> &tasks, const std::string &feature_dir,
                                          const ExperimentConfig &cfg, std::span<const Waveform> noise,
                                          bool force, std::size_t jobs) {
  std::vector<BatchOutcome> outcomes(tasks.size());
  ParallelFor(tasks.size(), jobs, [&](std::size_t i) {
    const auto &t = tasks[i];
    auto &o = outcomes[i];
    try {
      const auto path = FembPath(feature_dir, t.utt_id);
      Waveform w = LoadAudioAt(t.audio, cfg.frontend.sample_rate_hz);
      o.duration_s = static_cast<double>(w.size()) / w.sample_rate_hz;
      if (t.augmented) {
        Rng rng(t.seed);
        Rng probe = rng;
        const double factor = cfg.augment.speed_factors[probe.Index(cfg.augment.speed_factors.size())];
        o.duration_s = static_cast<double>(std::llround(static_cast<double>(w.size()) / factor)) /
                       w.sample_rate_hz;
        if (!force && fs::exists(path)) {
          o.skipped = true;
          return;
        }
        WriteFemb(ToEmbedding(t.utt_id, AugmentedLogMel(w, noise, cfg.augment, cfg.frontend, rng)),
                  path.string());
      } else {
        if (!force && fs::exists(path)) {
          o.skipped = true;
          return;
        }
        WriteFemb(ToEmbedding(t.utt_id, LogMel(w, cfg.frontend)), path.string());
      }
      o.written = true;
    } catch (const std::exception &e) {
      o.error = t.utt_id + ": " + e.what();
    }
  });
  return outcomes;
}

inline int ReportBatch(const std::vector<BatchOutcome> &outcomes, const Io &io) {
  std::size_t written = 0, skipped = 0, failed = 0;
  for (const auto &o : outcomes) {
    if (!o.error.empty()) {
      io.err << "error: " << o.error << '\n';
      ++failed;
    }
    written += o.written;
    skipped += o.skipped;
  }
  io.out << "written " << written << " skipped " << skipped << " failed " << failed << '\n';
  return failed ? kDataFailure : kOk;
}

/// Scores are restricted to the requested split and labelled from the manifest.
inline void CheckRegistry(const Registry &model, const Manifest &m, const std::string &what) {
  for (const auto &r : m.records)
    if (!model.contains(r.dialect))
      throw DataError("registry mismatch: dialect " + r.dialect + " of the manifest is not in the " + what);
}

/// Expands counts into argmax decisions so the detection cost follows from the matrix alone.
inline double LreCostFromCounts(const ConfusionMatrix &cm, const LreCostParams &p) {
  p.Validate();
  const std::size_t c = cm.size();
  std::vector<std::size_t> labels;
  std::vector<std::size_t> predicted;
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < c; ++j)
      for (std::int64_t k = 0; k < cm.counts(i, j); ++k) {
        labels.push_back(i);
        predicted.push_back(j);
      }
  DecisionTable accept(labels.size(), c);
  for (std::size_t n = 0; n < labels.size(); ++n) accept(n, predicted[n]) = 1;
  double sum = 0.0;
  for (double pt : p.p_targets) sum += AverageCost(accept, labels, c, pt, p.c_miss, p.c_fa);
  return sum / static_cast<double>(p.p_targets.size());
}

inline std::string AdiMetricsText(const ConfusionMatrix &cm, std::optional<double> lre) {
  std::ostringstream os;
  os << "trials " << cm.total() << "\ncorrect " << cm.trace() << "\naccuracy " << Fixed(Accuracy(cm)) << '\n';
  if (lre) os << "lre_cost " << Fixed(*lre, 4) << '\n';
  for (std::size_t i = 0; i < cm.size(); ++i) {
    const auto row = cm.row_sum(i), col = cm.col_sum(i);
    os << "class " << cm.registry[i].code << " recall "
       << (row ? Fixed(100.0 * static_cast<double>(cm.counts(i, i)) / static_cast<double>(row), 1) : "nan")
       << " precision "
       << (col ? Fixed(100.0 * static_cast<double>(cm.counts(i, i)) / static_cast<double>(col), 1) : "nan")
       << '\n';
  }
  return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int ManifestBuild(const std::string &root, const std::string &out_dir, const Io &io) {
  if (!fs::is_directory(root)) throw DataError("manifest build: no such directory " + root);
  std::vector<UtteranceRecord> records;
  for (const char *split_name : {"train", "adaptation", "validation", "test"}) {
    const fs::path split_dir = fs::path(root) / split_name;
    if (!fs::is_directory(split_dir)) continue;
    std::vector<fs::path> wavs;
    for (const auto &e : fs::recursive_directory_iterator(split_dir))
      if (e.is_regular_file() && e.path().extension() == ".wav") wavs.push_back(e.path());
    std::sort(wavs.begin(), wavs.end());
    for (const auto &p : wavs) {
      const Waveform w = ReadWav(p.string());
      UtteranceRecord r;
      r.utt_id = p.stem().string();
      r.audio_path = fs::absolute(p).lexically_normal().string();
      r.dialect = p.parent_path().filename().string();
      r.duration_s = static_cast<double>(w.size()) / w.sample_rate_hz;
      r.split = *ParseSplit(split_name);
      auto txt = p;
      txt.replace_extension(".txt");
      if (fs::exists(txt)) {
        std::string t = Nfc(ReadFileBytes(txt.string()));
        std::replace(t.begin(), t.end(), '\t', ' ');
        std::replace(t.begin(), t.end(), '\n', ' ');
        std::erase(t, '\r');
        r.transcript = t;
      }
      records.push_back(std::move(r));
    }
  }
  Manifest m;
  m.registry = UsedRegistry(KnownDialects(), records);
  m.records = std::move(records);
  ValidateManifest(m);
  detail::EnsureDir(out_dir);
  SaveManifest(m, detail::Under(out_dir, "manifest.tsv"));
  io.out << "records " << m.records.size() << '\n';
  return kOk;
}

inline int ManifestSummarize(const std::string &path, const std::string &split, const std::string &out_dir,
                             const Io &io) {
  const Manifest m = LoadManifest(path);
  const auto summary = DurationSummary(m, detail::SplitArg(split));
  std::ostringstream os;
  for (const auto &[code, hours] : summary) os << code << '\t' << detail::Fixed(hours) << '\n';
  os << "TOTAL\t" << detail::Fixed(TotalHours(summary)) << '\n';
  io.out << os.str();
  if (!out_dir.empty()) {
    detail::EnsureDir(out_dir);
    WriteFileBytes(detail::Under(out_dir, "summary.tsv"), os.str());
  }
  return kOk;
}

inline int ManifestStratify(const std::string &path, const std::string &split, double cap_hours,
                            std::uint64_t seed, const std::string &out_dir, const Io &io) {
  const Manifest m = LoadManifest(path);
  const Split s = detail::SplitArg(split);
  const Manifest sub = StratifiedSubset(m, s, cap_hours, seed);
  detail::EnsureDir(out_dir);
  SaveManifest(sub, detail::Under(out_dir, "stratified.tsv"));
  const auto summary = DurationSummary(sub, s);
  for (const auto &[code, hours] : summary) io.out << code << '\t' << detail::Fixed(hours) << '\n';
  io.out << "TOTAL\t" << detail::Fixed(TotalHours(summary)) << '\n';
  return kOk;
}

struct BatchArgs {
  std::string manifest;
  std::string out_dir;
  std::string config;
  std::string noise;
  bool force = false;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t jobs = 1;
};

inline int Featurize(const BatchArgs &a, const Io &io) {
  const ExperimentConfig cfg = detail::LoadOptionalConfig(a.config);
  const Manifest m = LoadManifest(a.manifest);
  detail::EnsureDir(a.out_dir);
  const std::string feature_dir = detail::Under(a.out_dir, "features");
  fs::create_directories(feature_dir);
  std::vector<detail::BatchTask> tasks;
  for (const auto &r : m.records) tasks.push_back({r.utt_id, detail::ResolveAudio(a.manifest, r.audio_path), 0, false});
  return detail::ReportBatch(detail::RunBatch(tasks, feature_dir, cfg, {}, a.force, a.jobs), io);
}

/// Clean features for every record plus `copies` augmented views of each
/// train/adaptation record, and a manifest listing both.
inline int Augment(const BatchArgs &a, const Io &io) {
  ExperimentConfig cfg = detail::LoadOptionalConfig(a.config);
  if (a.seed_given) cfg.augment.seed = a.seed;
  cfg.augment.Validate(cfg.frontend.n_mels);
  const Manifest m = LoadManifest(a.manifest);
  const std::string noise_path = a.noise.empty() ? cfg.noise_manifest : a.noise;
  const auto noise = detail::LoadNoisePool(noise_path, cfg.frontend.sample_rate_hz);
  detail::EnsureDir(a.out_dir);
  const std::string feature_dir = detail::Under(a.out_dir, "features");
  fs::create_directories(feature_dir);

  std::vector<detail::BatchTask> tasks;
  std::vector<UtteranceRecord> out_records;
  for (const auto &r : m.records) {
    const auto audio = detail::ResolveAudio(a.manifest, r.audio_path);
    tasks.push_back({r.utt_id, audio, 0, false});
    out_records.push_back(r);
    if (!IsAugmentableSplit(r.split)) continue;
    for (int k = 0; k < cfg.augment.copies; ++k) {
      const std::string id = r.utt_id + "#aug" + std::to_string(k);
      tasks.push_back({id, audio, UtteranceSeed(cfg.augment.seed, id), true});
      UtteranceRecord copy = r;
      copy.utt_id = id;
      out_records.push_back(std::move(copy));
    }
  }
  const auto outcomes = detail::RunBatch(tasks, feature_dir, cfg, noise, a.force, a.jobs);
  Manifest augmented{m.registry, {}};
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!outcomes[i].error.empty()) continue;
    UtteranceRecord r = out_records[i];
    if (tasks[i].augmented) r.duration_s = outcomes[i].duration_s;
    augmented.records.push_back(std::move(r));
  }
  SaveManifest(augmented, detail::Under(a.out_dir, "augmented_manifest.tsv"));
  return detail::ReportBatch(outcomes, io);
}

struct TrainArgs {
  std::string stage1;
  std::string stage2;
  std::string features;
  std::string out_dir;
  std::string config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t jobs = 1;
  int max_epochs = 0;
};

inline int Train(const TrainArgs &a, const Io &io) {
  ExperimentConfig cfg = detail::LoadOptionalConfig(a.config);
  TrainConfig tc = cfg.train;
  if (a.seed_given) tc.seed = a.seed;
  if (a.max_epochs > 0) tc.max_epochs = a.max_epochs;
  tc.jobs = a.jobs;
  tc.Validate();
  const std::string stage1_path = a.stage1.empty() ? cfg.stage1_manifest : a.stage1;
  const std::string stage2_path = a.stage2.empty() ? cfg.stage2_manifest : a.stage2;
  const std::string features_dir = a.features.empty() ? cfg.features_dir : a.features;
  if (stage1_path.empty()) throw DataError("train: no stage-1 manifest");
  if (features_dir.empty()) throw DataError("train: no feature directory");
  detail::EnsureDir(a.out_dir);

  FeatureStore features{fs::path(features_dir)};
  const Manifest base = LoadManifest(stage1_path);
  TwoStageResult result;
  if (stage2_path.empty()) {
    result.stage1 = Fit(base, features, tc, std::nullopt, {Split::kTrain, Split::kValidation, 1});
  } else {
    result = TwoStage(base, LoadManifest(stage2_path), features, tc);
  }
  for (const auto &w : result.warnings) io.err << "warning: " << w << '\n';

  WriteFileBytes(detail::Under(a.out_dir, "stage1.ckpt"), EncodeTrainState(result.stage1.state));
  WriteFileBytes(detail::Under(a.out_dir, "epochs.stage1.csv"), FormatEpochLog(result.stage1.log));
  if (result.stage2) {
    WriteFileBytes(detail::Under(a.out_dir, "epochs.stage2.csv"), FormatEpochLog(result.stage2->log));
    io.out << "zero_shot_accuracy " << detail::Fixed(result.zero_shot_accuracy) << '\n';
  }
  const TrainState &final_state = result.final_state();
  WriteFileBytes(detail::Under(a.out_dir, "final.ckpt"), EncodeTrainState(final_state));
  WriteFileBytes(detail::Under(a.out_dir, "final.head"), EncodeHead(final_state.params, final_state.registry));
  const auto &last = result.stage2 ? *result.stage2 : result.stage1;
  io.out << "epochs " << last.epochs_run << " best_validation_accuracy "
         << detail::Fixed(final_state.best_val_metric) << '\n';
  return kOk;
}

/// Accepts either a training checkpoint or a bare head file; both start with
/// the head block.
inline HeadCheckpoint LoadModel(const std::string &path) {
  const std::string bytes = ReadFileBytes(path);
  ByteReader in(bytes, path);
  return DecodeHeadFrom(in);
}

inline int Predict(const std::string &checkpoint, const std::string &manifest_path, const std::string &features_dir,
                   const std::string &split, const std::string &out_dir, std::size_t jobs, const Io &io) {
  const HeadCheckpoint model = LoadModel(checkpoint);
  Manifest m = LoadManifest(manifest_path);
  const Split s = detail::SplitArg(split);
  std::erase_if(m.records, [&](const UtteranceRecord &r) { return r.split != s; });
  if (m.records.empty()) throw DataError("predict: no records in split " + split);
  detail::CheckRegistry(model.registry, m, "model registry");
  FeatureStore features{fs::path(features_dir)};
  for (const auto &r : m.records) features.Get(r.utt_id);

  TrialScores ts;
  ts.registry = model.registry;
  ts.log_posteriors = Matrix<double>(m.records.size(), model.registry.size());
  ParallelFor(m.records.size(), jobs, [&](std::size_t i) {
    const auto out = Forward(model.params, features.Get(m.records[i].utt_id).frames);
    std::copy(out.log_probs.begin(), out.log_probs.end(), ts.log_posteriors.row(i).begin());
  });
  for (const auto &r : m.records) {
    ts.utt_ids.push_back(r.utt_id);
    ts.labels.push_back(model.registry.index_of(r.dialect));
  }
  detail::EnsureDir(out_dir);
  WriteFileBytes(detail::Under(out_dir, "scores.tsv"), FormatScores(ts));
  io.out << "trials " << ts.num_trials() << " accuracy " << detail::Fixed(Accuracy(Confusion(ts))) << '\n';
  return kOk;
}

struct ScoreAdiArgs {
  std::string scores;
  std::string counts;
  std::string manifest;
  std::string config;
  std::string out_dir;
  std::string normalize = "row";
};

inline int ScoreAdi(const ScoreAdiArgs &a, const Io &io) {
  if (a.scores.empty() == a.counts.empty()) throw DataError("score-adi: give exactly one of --scores or --counts");
  const ExperimentConfig cfg = detail::LoadOptionalConfig(a.config);
  const Axis axis = a.normalize == "column" ? Axis::kColumn : Axis::kRow;
  if (a.normalize != "row" && a.normalize != "column") throw DataError("--normalize must be row or column");

  ConfusionMatrix cm;
  std::optional<double> lre;
  if (!a.scores.empty()) {
    const TrialScores ts = ParseScores(ReadFileBytes(a.scores), a.scores);
    if (!a.manifest.empty()) detail::CheckRegistry(ts.registry, LoadManifest(a.manifest), "score header");
    cm = Confusion(ts);
    if (ts.num_trials() > 0) lre = LreCost(ts, cfg.lre);
  } else {
    cm = ParseConfusionCsv(ReadFileBytes(a.counts), a.counts);
    if (!a.manifest.empty()) detail::CheckRegistry(cm.registry, LoadManifest(a.manifest), "counts header");
    if (cfg.lre.rule == DecisionRule::kArgmax && cm.total() > 0) lre = detail::LreCostFromCounts(cm, cfg.lre);
  }
  const std::string metrics = detail::AdiMetricsText(cm, lre);
  detail::EnsureDir(a.out_dir);
  WriteFileBytes(detail::Under(a.out_dir, "confusion.csv"), FormatConfusionCsv(cm));
  WriteFileBytes(detail::Under(a.out_dir, "confusion.svg"), RenderConfusionSvg(cm, axis));
  WriteFileBytes(detail::Under(a.out_dir, "adi_metrics.txt"), metrics);
  io.out << "accuracy " << detail::Fixed(Accuracy(cm)) << '\n';
  if (lre) io.out << "lre_cost " << detail::Fixed(*lre, 4) << '\n';
  return kOk;
}

struct ScoreAsrArgs {
  std::string manifest;
  std::string split = "test";
  std::string refs;
  std::vector<std::string> hyps;  // CODE=path
  std::string config;
  std::string out_dir;
};

inline int ScoreAsr(const ScoreAsrArgs &a, const Io &io) {
  const ExperimentConfig cfg = detail::LoadOptionalConfig(a.config);
  const Manifest m = LoadManifest(a.manifest);
  const Split s = detail::SplitArg(a.split);

  std::map<std::string, std::string> routing = cfg.routing;
  for (const auto &h : a.hyps) {
    const auto eq = h.find('=');
    if (eq == std::string::npos || eq == 0) throw DataError("--hyp expects CODE=path, got '" + h + "'");
    routing[h.substr(0, eq)] = h.substr(eq + 1);
  }
  if (routing.empty()) throw DataError("score-asr: no hypothesis routing (use --hyp or the config routing table)");

  std::map<std::string, std::string> refs;
  if (!a.refs.empty()) {
    refs = LoadTranscripts(a.refs).text;
  } else {
    for (const auto &r : m.records)
      if (r.split == s) refs[r.utt_id] = Nfc(r.transcript);
  }

  std::map<std::string, std::vector<std::string>> ids_by_dialect;
  for (const auto &r : m.records)
    if (r.split == s) ids_by_dialect[r.dialect].push_back(r.utt_id);
  if (ids_by_dialect.empty()) throw DataError("score-asr: no records in split " + a.split);
  for (const auto &[code, path] : routing)
    if (!ids_by_dialect.count(code)) throw DataError("registry mismatch: routed dialect " + code + " has no records");

  std::vector<DialectAsrScore> scores;
  for (const auto &[code, ids] : ids_by_dialect) {
    auto route = routing.find(code);
    if (route == routing.end()) throw DataError("score-asr: no hypothesis file routed for dialect " + code);
    const auto hyps = LoadTranscripts(route->second).text;
    scores.push_back(ScoreDialect(code, ids, refs, hyps, cfg.scoring));
    if (scores.back().missing_hypotheses)
      io.err << "warning: " << code << ": " << scores.back().missing_hypotheses
             << " utterances without hypothesis scored as empty\n";
  }
  detail::EnsureDir(a.out_dir);
  WriteFileBytes(detail::Under(a.out_dir, "asr_report.csv"), FormatAsrReport(scores));
  std::map<std::string, double> wer, cer;
  for (const auto &sc : scores) {
    wer[sc.dialect] = sc.words.rate();
    cer[sc.dialect] = sc.chars.rate();
  }
  io.out << "macro WER " << detail::Fixed(MacroAverage(wer)) << '\n';
  io.out << "macro CER " << detail::Fixed(MacroAverage(cer)) << '\n';
  return kOk;
}

inline int Report(const std::string &scores_path, const std::string &asr_report, const std::string &config,
                  const std::string &out_dir, const Io &io) {
  const ExperimentConfig cfg = detail::LoadOptionalConfig(config);
  const TrialScores ts = ParseScores(ReadFileBytes(scores_path), scores_path);
  if (ts.num_trials() == 0) throw DataError("report: " + scores_path + " holds no trials");
  const ConfusionMatrix cm = Confusion(ts);
  std::ostringstream os;
  os << "# Evaluation report\n\n## Dialect identification\n\n";
  os << "| trials | accuracy (%) | LRE cost |\n|---|---|---|\n";
  os << "| " << cm.total() << " | " << detail::Fixed(Accuracy(cm)) << " | " << detail::Fixed(LreCost(ts, cfg.lre), 4)
     << " |\n";
  if (!asr_report.empty()) {
    os << "\n## Speech recognition\n\n| dialect | WER (%) | CER (%) |\n|---|---|---|\n";
    std::istringstream is(ReadFileBytes(asr_report));
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
      std::vector<std::string> f;
      std::stringstream ls(line);
      for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
      if (f.size() < 3) throw DataError(asr_report + ": malformed row '" + line + "'");
      os << "| " << f[0] << " | " << f[1] << " | " << f[2] << " |\n";
    }
  }
  detail::EnsureDir(out_dir);
  WriteFileBytes(detail::Under(out_dir, "report.md"), os.str());
  io.out << os.str();
  return kOk;
}

inline int ConfigDump(const std::string &path, bool validate, const Io &io) {
  const ExperimentConfig cfg = LoadConfig(path);
  if (validate) ValidateConfig(cfg);
  io.out << SerializeConfig(cfg);
  return kOk;
}

// ---------------------------------------------------------------------------

/// `args` excludes the program name.
inline int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  const Io io{out, err};
  CLI::App app{"Dialect identification and dialectal ASR benchmarking toolkit", "dialect-bench"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::size_t jobs = DefaultJobs();
  std::string out_dir, config;
  auto common = [&](CLI::App *c, bool needs_out_dir) {
    c->add_option("--seed", seed, "Random seed");
    c->add_option("--jobs", jobs, "Worker threads (default: DIALECT_BENCH_JOBS or logical cores)")
        ->check(CLI::PositiveNumber);
    c->add_option("--config", config, "Experiment configuration file");
    auto *o = c->add_option("--out-dir", out_dir, "Output directory");
    if (needs_out_dir) o->required();
  };
  auto seed_given = [](CLI::App *c) { return c->get_option("--seed")->count() > 0; };

  // manifest
  auto *manifest = app.add_subcommand("manifest", "Build, summarize or stratify utterance manifests");
  manifest->require_subcommand(1);
  std::string root, manifest_path, split = "train";
  double cap_hours = 0.0;
  auto *build = manifest->add_subcommand("build", "Scan <root>/<split>/<CODE>/*.wav into a manifest");
  build->add_option("--root", root, "Corpus root")->required();
  common(build, true);
  auto *summarize = manifest->add_subcommand("summarize", "Hours per dialect for one split");
  summarize->add_option("--manifest", manifest_path)->required();
  summarize->add_option("--split", split);
  common(summarize, false);
  auto *stratify = manifest->add_subcommand("stratify", "Cap every dialect of a split at a number of hours");
  stratify->add_option("--manifest", manifest_path)->required();
  stratify->add_option("--split", split);
  stratify->add_option("--cap-hours", cap_hours)->required();
  common(stratify, true);

  // featurize / augment
  BatchArgs batch;
  auto *featurize = app.add_subcommand("featurize", "Log-mel features for every record");
  auto *augment = app.add_subcommand("augment", "Clean plus augmented features and an augmented manifest");
  for (auto *c : {featurize, augment}) {
    c->add_option("--manifest", batch.manifest)->required();
    c->add_flag("--force", batch.force, "Rewrite existing outputs");
    common(c, true);
  }
  augment->add_option("--noise", batch.noise, "Noise manifest or WAV path list");

  // train
  TrainArgs train;
  auto *train_cmd = app.add_subcommand("train", "Fit the classification head (optionally in two stages)");
  train_cmd->add_option("--stage1", train.stage1);
  train_cmd->add_option("--stage2", train.stage2);
  train_cmd->add_option("--features", train.features);
  train_cmd->add_option("--max-epochs", train.max_epochs)->check(CLI::PositiveNumber);
  common(train_cmd, true);

  // predict
  std::string checkpoint, features_dir;
  std::string predict_split = "test";
  auto *predict = app.add_subcommand("predict", "Write per-utterance log posteriors");
  predict->add_option("--checkpoint", checkpoint)->required();
  predict->add_option("--manifest", manifest_path)->required();
  predict->add_option("--features", features_dir)->required();
  predict->add_option("--split", predict_split);
  common(predict, true);

  // scoring
  ScoreAdiArgs adi;
  auto *score_adi = app.add_subcommand("score-adi", "Accuracy, LRE cost and confusion matrix");
  score_adi->add_option("--scores", adi.scores);
  score_adi->add_option("--counts", adi.counts);
  score_adi->add_option("--manifest", adi.manifest);
  score_adi->add_option("--normalize", adi.normalize)->check(CLI::IsMember({"row", "column"}));
  common(score_adi, true);

  ScoreAsrArgs asr;
  auto *score_asr = app.add_subcommand("score-asr", "Per-dialect and macro WER/CER");
  score_asr->add_option("--manifest", asr.manifest)->required();
  score_asr->add_option("--split", asr.split);
  score_asr->add_option("--refs", asr.refs);
  score_asr->add_option("--hyp", asr.hyps, "CODE=hypothesis transcript file");
  common(score_asr, true);

  std::string scores_path, asr_report;
  auto *report = app.add_subcommand("report", "Markdown summary of scoring outputs");
  report->add_option("--scores", scores_path)->required();
  report->add_option("--asr-report", asr_report);
  common(report, true);

  // config
  auto *config_cmd = app.add_subcommand("config", "Configuration utilities");
  config_cmd->require_subcommand(1);
  bool validate = false;
  auto *dump = config_cmd->add_subcommand("dump", "Print the canonical form of a config file");
  dump->add_flag("--validate", validate, "Also check referenced paths");
  common(dump, false);
  dump->get_option("--config")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError &e) {
    // Subcommand help requests surface here too.
    if (e.get_exit_code() == 0) {
      out << e.what() << '\n';
      return kOk;
    }
    err << "usage error: " << e.what() << '\n';
    return kUsageFailure;
  }

  try {
    if (build->parsed()) return ManifestBuild(root, out_dir, io);
    if (summarize->parsed()) return ManifestSummarize(manifest_path, split, out_dir, io);
    if (stratify->parsed()) return ManifestStratify(manifest_path, split, cap_hours, seed, out_dir, io);
    for (auto *c : {featurize, augment}) {
      if (!c->parsed()) continue;
      batch.out_dir = out_dir;
      batch.config = config;
      batch.seed = seed;
      batch.seed_given = seed_given(c);
      batch.jobs = jobs;
      return c == featurize ? Featurize(batch, io) : Augment(batch, io);
    }
    if (train_cmd->parsed()) {
      train.out_dir = out_dir;
      train.config = config;
      train.seed = seed;
      train.seed_given = seed_given(train_cmd);
      train.jobs = jobs;
      return Train(train, io);
    }
    if (predict->parsed()) return Predict(checkpoint, manifest_path, features_dir, predict_split, out_dir, jobs, io);
    if (score_adi->parsed()) {
      adi.out_dir = out_dir;
      adi.config = config;
      return ScoreAdi(adi, io);
    }
    if (score_asr->parsed()) {
      asr.out_dir = out_dir;
      asr.config = config;
      return ScoreAsr(asr, io);
    }
    if (report->parsed()) return Report(scores_path, asr_report, config, out_dir, io);
    if (dump->parsed()) return ConfigDump(config, validate, io);
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::kNumeric ? kInternalFailure : kDataFailure;
  } catch (const std::filesystem::filesystem_error &e) {
    err << "error: " << e.what() << '\n';
    return kDataFailure;
  } catch (const std::exception &e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalFailure;
  }
  err << "usage error: no command\n";
  return kUsageFailure;
}

}  // namespace dialect_bench::cli

#endif  // DIALECT_BENCH_TOOLS_CLI_COMMANDS_HPP_
