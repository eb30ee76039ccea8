// dialect_bench/config.hpp

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

// Experiment configuration. Files are a YAML subset (nested "key: value"
// blocks); parsing goes through yaml-cpp and writing through a canonical
// emitter with fixed key order, so serialize -> parse -> serialize is
// byte-identical.

#ifndef DIALECT_BENCH_CONFIG_HPP_
#define DIALECT_BENCH_CONFIG_HPP_

#include <charconv>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "dialect_bench/augment.hpp"
#include "dialect_bench/dsp.hpp"
#include "dialect_bench/metrics_adi.hpp"
#include "dialect_bench/metrics_asr.hpp"
#include "dialect_bench/trainer.hpp"

namespace dialect_bench {

struct ExperimentConfig {
  std::string stage1_manifest;
  std::string stage2_manifest;
  std::string features_dir;
  std::string noise_manifest;
  std::string out_dir;
  FrontendConfig frontend;
  AugmentSpec augment;
  TrainConfig train;
  LreCostParams lre;
  ScoringOptions scoring;
  std::map<std::string, std::string> routing;  // dialect -> per-dialect model output
};

namespace detail {

inline std::string Quote(const std::string &s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

inline std::string Num(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, r.ptr);
  // Keep floats recognizable as floats ("1" -> "1.0").
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline std::string Num(std::uint64_t v) { return std::to_string(v); }
inline std::string Num(int v) { return std::to_string(v); }
inline std::string Bool(bool b) { return b ? "true" : "false"; }

inline std::string List(const std::vector<double> &v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + Num(v[i]);
  return out + "]";
}

/// Reads the children of a mapping node, rejecting unknown keys.
class Section {
 public:
  Section(const YAML::Node &node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_.IsMap()) throw DataError("config: '" + path_ + "' must be a mapping");
    if (node_)
      for (const auto &kv : node_) keys_.insert(kv.first.as<std::string>());
  }

  template <typename T>
  void Get(const char *key, T &out) {
    keys_.erase(key);
    if (!node_ || !node_[key]) return;
    try {
      out = node_[key].template as<T>();
    } catch (const YAML::Exception &e) {
      throw DataError("config: bad value for '" + path_ + key + "': " + e.what());
    }
  }

  Section Child(const char *key) {
    keys_.erase(key);
    return Section(node_ ? node_[key] : YAML::Node(), path_ + key + ".");
  }

  YAML::Node Raw(const char *key) {
    keys_.erase(key);
    return node_ ? node_[key] : YAML::Node();
  }

  void Finish() const {
    if (!keys_.empty()) throw DataError("config: unknown key '" + path_ + *keys_.begin() + "'");
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> keys_;
};

}  // namespace detail

inline std::string SerializeConfig(const ExperimentConfig &c) {
  using namespace detail;
  std::string o;
  auto line = [&](int indent, const std::string &key, const std::string &value) {
    o += std::string(static_cast<std::size_t>(indent), ' ') + key + ": " + value + "\n";
  };
  auto header = [&](const std::string &key) { o += key + ":\n"; };

  header("manifests");
  line(2, "stage1", Quote(c.stage1_manifest));
  line(2, "stage2", Quote(c.stage2_manifest));
  line(2, "noise", Quote(c.noise_manifest));
  line(0, "features_dir", Quote(c.features_dir));
  line(0, "out_dir", Quote(c.out_dir));

  header("frontend");
  line(2, "sample_rate_hz", Num(c.frontend.sample_rate_hz));
  line(2, "n_fft", Num(c.frontend.n_fft));
  line(2, "win_length", Num(c.frontend.win_length));
  line(2, "hop_length", Num(c.frontend.hop_length));
  line(2, "n_mels", Num(c.frontend.n_mels));

  header("augment");
  line(2, "snr_db_lo", Num(c.augment.snr_db_lo));
  line(2, "snr_db_hi", Num(c.augment.snr_db_hi));
  line(2, "speed_factors", List(c.augment.speed_factors));
  line(2, "freq_masks", Num(c.augment.freq_mask.n_masks));
  line(2, "freq_mask_max_width", Num(c.augment.freq_mask.max_width_bins));
  line(2, "chunks", Num(c.augment.chunk_drop.n_chunks));
  line(2, "chunk_len_s", Num(c.augment.chunk_drop.chunk_len_s));
  line(2, "copies", Num(c.augment.copies));
  line(2, "seed", Num(c.augment.seed));

  header("train");
  line(2, "lr_group_low", Num(c.train.lr_group_low));
  line(2, "lr_group_high", Num(c.train.lr_group_high));
  line(2, "adam_beta1", Num(c.train.adam_beta1));
  line(2, "adam_beta2", Num(c.train.adam_beta2));
  line(2, "adam_eps", Num(c.train.adam_eps));
  line(2, "max_epochs", Num(c.train.max_epochs));
  line(2, "newbob_factor", Num(c.train.newbob_factor));
  line(2, "newbob_threshold", Num(c.train.newbob_threshold));
  line(2, "patience", Num(c.train.patience));
  line(2, "batch_size", Num(c.train.batch_size));
  line(2, "seed", Num(c.train.seed));
  line(2, "smoothing", Num(c.train.smoothing));
  line(2, "attention_dim", Num(static_cast<std::uint64_t>(c.train.attention_dim)));
  line(2, "pooling", c.train.pooling == Pooling::kMean ? "mean" : "mean_std");
  line(2, "adapter", Bool(c.train.adapter));

  header("metrics");
  line(2, "p_targets", List(c.lre.p_targets));
  line(2, "c_miss", Num(c.lre.c_miss));
  line(2, "c_fa", Num(c.lre.c_fa));
  line(2, "decision_rule", c.lre.rule == DecisionRule::kArgmax ? "argmax" : "threshold");
  line(2, "strip_punctuation", Bool(c.scoring.policy.strip_punctuation));
  line(2, "remove_diacritics", Bool(c.scoring.policy.remove_diacritics));
  line(2, "normalize_alef_ya", Bool(c.scoring.policy.normalize_alef_ya));
  line(2, "cer_keep_spaces", Bool(c.scoring.cer_keep_spaces));

  if (c.routing.empty()) {
    o += "routing: {}\n";
  } else {
    header("routing");
    for (const auto &[code, path] : c.routing) line(2, code, Quote(path));
  }
  return o;
}

inline ExperimentConfig ParseConfig(const std::string &text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception &e) {
    throw DataError(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  if (!root || root.IsNull()) return c;
  detail::Section top(root, "");

  auto manifests = top.Child("manifests");
  manifests.Get("stage1", c.stage1_manifest);
  manifests.Get("stage2", c.stage2_manifest);
  manifests.Get("noise", c.noise_manifest);
  manifests.Finish();
  top.Get("features_dir", c.features_dir);
  top.Get("out_dir", c.out_dir);

  auto fe = top.Child("frontend");
  fe.Get("sample_rate_hz", c.frontend.sample_rate_hz);
  fe.Get("n_fft", c.frontend.n_fft);
  fe.Get("win_length", c.frontend.win_length);
  fe.Get("hop_length", c.frontend.hop_length);
  fe.Get("n_mels", c.frontend.n_mels);
  fe.Finish();

  auto au = top.Child("augment");
  au.Get("snr_db_lo", c.augment.snr_db_lo);
  au.Get("snr_db_hi", c.augment.snr_db_hi);
  au.Get("speed_factors", c.augment.speed_factors);
  au.Get("freq_masks", c.augment.freq_mask.n_masks);
  au.Get("freq_mask_max_width", c.augment.freq_mask.max_width_bins);
  au.Get("chunks", c.augment.chunk_drop.n_chunks);
  au.Get("chunk_len_s", c.augment.chunk_drop.chunk_len_s);
  au.Get("copies", c.augment.copies);
  au.Get("seed", c.augment.seed);
  au.Finish();

  auto tr = top.Child("train");
  tr.Get("lr_group_low", c.train.lr_group_low);
  tr.Get("lr_group_high", c.train.lr_group_high);
  tr.Get("adam_beta1", c.train.adam_beta1);
  tr.Get("adam_beta2", c.train.adam_beta2);
  tr.Get("adam_eps", c.train.adam_eps);
  tr.Get("max_epochs", c.train.max_epochs);
  tr.Get("newbob_factor", c.train.newbob_factor);
  tr.Get("newbob_threshold", c.train.newbob_threshold);
  tr.Get("patience", c.train.patience);
  tr.Get("batch_size", c.train.batch_size);
  tr.Get("seed", c.train.seed);
  tr.Get("smoothing", c.train.smoothing);
  tr.Get("attention_dim", c.train.attention_dim);
  std::string pooling = "mean_std";
  tr.Get("pooling", pooling);
  if (pooling == "mean") c.train.pooling = Pooling::kMean;
  else if (pooling == "mean_std") c.train.pooling = Pooling::kMeanStd;
  else throw DataError("config: train.pooling must be 'mean' or 'mean_std'");
  tr.Get("adapter", c.train.adapter);
  tr.Finish();

  auto me = top.Child("metrics");
  me.Get("p_targets", c.lre.p_targets);
  me.Get("c_miss", c.lre.c_miss);
  me.Get("c_fa", c.lre.c_fa);
  std::string rule = "argmax";
  me.Get("decision_rule", rule);
  if (rule == "argmax") c.lre.rule = DecisionRule::kArgmax;
  else if (rule == "threshold") c.lre.rule = DecisionRule::kThreshold;
  else throw DataError("config: metrics.decision_rule must be 'argmax' or 'threshold'");
  me.Get("strip_punctuation", c.scoring.policy.strip_punctuation);
  me.Get("remove_diacritics", c.scoring.policy.remove_diacritics);
  me.Get("normalize_alef_ya", c.scoring.policy.normalize_alef_ya);
  me.Get("cer_keep_spaces", c.scoring.cer_keep_spaces);
  me.Finish();

  auto routing = top.Raw("routing");
  if (routing && !routing.IsNull()) {
    if (!routing.IsMap()) throw DataError("config: 'routing' must be a mapping");
    for (const auto &kv : routing) c.routing[kv.first.as<std::string>()] = kv.second.as<std::string>();
  }
  top.Finish();
  return c;
}

inline ExperimentConfig LoadConfig(const std::string &path) { return ParseConfig(ReadFileBytes(path)); }

/// Checks that every referenced input path exists and the numeric sections
/// are self-consistent.
inline void ValidateConfig(const ExperimentConfig &c) {
  namespace fs = std::filesystem;
  auto must_exist = [](const std::string &p, const char *what) {
    if (!p.empty() && !fs::exists(p)) throw DataError(std::string("config: ") + what + " not found: " + p);
  };
  must_exist(c.stage1_manifest, "stage1 manifest");
  must_exist(c.stage2_manifest, "stage2 manifest");
  must_exist(c.noise_manifest, "noise manifest");
  must_exist(c.features_dir, "features directory");
  for (const auto &[code, path] : c.routing) must_exist(path, ("routing entry " + code).c_str());
  c.augment.Validate(c.frontend.n_mels);
  c.train.Validate();
  c.lre.Validate();
}

}  // namespace dialect_bench

#endif  // DIALECT_BENCH_CONFIG_HPP_
