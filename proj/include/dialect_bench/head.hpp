// dialect_bench/head.hpp

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

// Attention-pooling utterance classifier over frozen frame embeddings.
//
// For frames h_1..h_T (each D-dim), optionally passed through a linear
// adapter x_t = W_ad h_t + b_ad:
//
//   s_t   = v . tanh(W_att x_t + b_att)
//   alpha = softmax(s)
//   mu    = sum_t alpha_t x_t
//   sigma = sqrt(sum_t alpha_t (x_t - mu)^2 + eps)        (elementwise)
//   pooled = mu            (kMean)
//          = [mu; sigma]   (kMeanStd)
//   log_probs = log_softmax(W_cls pooled + b_cls)
//
// All arithmetic runs in double regardless of the parameter storage type.

#ifndef DIALECT_BENCH_HEAD_HPP_
#define DIALECT_BENCH_HEAD_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dialect_bench/common.hpp"
#include "dialect_bench/corpus.hpp"
#include "dialect_bench/embedio.hpp"

namespace dialect_bench {

enum class Pooling { kMean = 1, kMeanStd = 2 };

inline constexpr double kStdEpsilon = 1e-8;

struct HeadConfig {
  std::size_t dim = 0;             // D
  std::size_t attention_dim = 128;  // A
  std::size_t num_classes = 0;      // C
  Pooling pooling = Pooling::kMeanStd;
  bool adapter = false;

  std::size_t pooled_dim() const { return pooling == Pooling::kMeanStd ? 2 * dim : dim; }
  bool operator==(const HeadConfig &) const = default;
};

/// Learning-rate group of a tensor: the adapter stands in for the lightly
/// tuned lower layers, everything else is the head proper.
enum class LrGroup { kLow, kHigh };

template <typename T>
struct HeadParameters {
  HeadConfig config;
  Matrix<T> adapter_w;  // D x D (empty without adapter)
  std::vector<T> adapter_b;
  Matrix<T> att_w;  // A x D
  std::vector<T> att_b;
  std::vector<T> att_v;
  Matrix<T> cls_w;  // C x P
  std::vector<T> cls_b;

  HeadParameters() = default;
  explicit HeadParameters(const HeadConfig &cfg)
      : config(cfg),
        att_w(cfg.attention_dim, cfg.dim),
        att_b(cfg.attention_dim),
        att_v(cfg.attention_dim),
        cls_w(cfg.num_classes, cfg.pooled_dim()),
        cls_b(cfg.num_classes) {
    if (cfg.adapter) {
      adapter_w = Matrix<T>(cfg.dim, cfg.dim);
      adapter_b.assign(cfg.dim, T{});
    }
  }

  /// Visits every tensor in checkpoint order as (name, flat view, group).
  template <typename F>
  void ForEachTensor(F &&f) {
    if (config.adapter) {
      f("adapter_w", std::span<T>(adapter_w.data()), LrGroup::kLow);
      f("adapter_b", std::span<T>(adapter_b), LrGroup::kLow);
    }
    f("att_w", std::span<T>(att_w.data()), LrGroup::kHigh);
    f("att_b", std::span<T>(att_b), LrGroup::kHigh);
    f("att_v", std::span<T>(att_v), LrGroup::kHigh);
    f("cls_w", std::span<T>(cls_w.data()), LrGroup::kHigh);
    f("cls_b", std::span<T>(cls_b), LrGroup::kHigh);
  }

  template <typename F>
  void ForEachTensor(F &&f) const {
    const_cast<HeadParameters *>(this)->ForEachTensor(
        [&](const char *name, std::span<T> values, LrGroup g) {
          f(name, std::span<const T>(values), g);
        });
  }

  template <typename U>
  HeadParameters<U> cast() const {
    HeadParameters<U> out(config);
    std::vector<std::span<U>> dst;
    out.ForEachTensor([&](const char *, std::span<U> v, LrGroup) { dst.push_back(v); });
    std::size_t i = 0;
    ForEachTensor([&](const char *, std::span<const T> v, LrGroup) {
      std::transform(v.begin(), v.end(), dst[i++].begin(), [](T x) { return static_cast<U>(x); });
    });
    return out;
  }

  std::size_t size() const {
    std::size_t n = 0;
    ForEachTensor([&](const char *, std::span<const T> v, LrGroup) { n += v.size(); });
    return n;
  }

  bool operator==(const HeadParameters &) const = default;
};

/// Xavier-uniform weights, zero biases, identity adapter.
inline HeadParameters<float> InitHead(const HeadConfig &cfg, std::uint64_t seed) {
  if (cfg.dim == 0 || cfg.attention_dim == 0 || cfg.num_classes < 2)
    throw DataError("head: need D >= 1, A >= 1 and at least two classes");
  HeadParameters<float> p(cfg);
  Rng rng(seed);
  auto xavier = [&](std::span<float> w, std::size_t fan_in, std::size_t fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto &x : w) x = static_cast<float>(rng.Uniform(-bound, bound));
  };
  if (cfg.adapter)
    for (std::size_t i = 0; i < cfg.dim; ++i) p.adapter_w(i, i) = 1.0f;
  xavier(p.att_w.data(), cfg.dim, cfg.attention_dim);
  xavier(p.att_v, cfg.attention_dim, 1);
  xavier(p.cls_w.data(), cfg.pooled_dim(), cfg.num_classes);
  return p;
}

/// Replaces the output layer with a freshly initialized one for `num_classes`,
/// keeping adapter and attention parameters.
inline HeadParameters<float> ReplaceClassifier(const HeadParameters<float> &p,
                                               std::size_t num_classes, std::uint64_t seed) {
  HeadConfig cfg = p.config;
  cfg.num_classes = num_classes;
  HeadParameters<float> fresh = InitHead(cfg, seed);
  fresh.adapter_w = p.adapter_w;
  fresh.adapter_b = p.adapter_b;
  fresh.att_w = p.att_w;
  fresh.att_b = p.att_b;
  fresh.att_v = p.att_v;
  return fresh;
}

struct HeadOutput {
  std::vector<double> log_probs;  // C
  std::vector<double> attention;  // T
  std::vector<double> pooled;     // P
};

namespace detail {

/// Intermediate values kept for the backward pass.
struct ForwardTrace {
  Matrix<double> x;       // T x D, adapted frames
  Matrix<double> hidden;  // T x A, tanh activations
  std::vector<double> mu, sigma;
  HeadOutput out;
};

inline void LogSoftmaxInPlace(std::vector<double> &z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  const double lse = m + std::log(s);
  for (double &v : z) v -= lse;
}

template <typename T>
ForwardTrace ForwardImpl(const HeadParameters<T> &p, const Matrix<float> &frames) {
  const auto &cfg = p.config;
  if (frames.cols() != cfg.dim)
    throw DataError("head: embedding dim " + std::to_string(frames.cols()) +
                    " does not match model dim " + std::to_string(cfg.dim));
  if (frames.rows() == 0) throw DataError("head: empty embedding sequence");
  for (float v : frames.data())
    if (!std::isfinite(v)) throw NumericError("head: non-finite input frame");

  const std::size_t T_ = frames.rows(), D = cfg.dim, A = cfg.attention_dim, C = cfg.num_classes;
  ForwardTrace tr;
  tr.x = Matrix<double>(T_, D);
  for (std::size_t t = 0; t < T_; ++t) {
    if (cfg.adapter) {
      for (std::size_t i = 0; i < D; ++i) {
        double acc = p.adapter_b[i];
        for (std::size_t j = 0; j < D; ++j) acc += double(p.adapter_w(i, j)) * frames(t, j);
        tr.x(t, i) = acc;
      }
    } else {
      for (std::size_t i = 0; i < D; ++i) tr.x(t, i) = frames(t, i);
    }
  }

  tr.hidden = Matrix<double>(T_, A);
  std::vector<double> scores(T_);
  for (std::size_t t = 0; t < T_; ++t) {
    double s = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      double acc = p.att_b[a];
      for (std::size_t j = 0; j < D; ++j) acc += double(p.att_w(a, j)) * tr.x(t, j);
      const double u = std::tanh(acc);
      tr.hidden(t, a) = u;
      s += double(p.att_v[a]) * u;
    }
    scores[t] = s;
  }

  auto &alpha = tr.out.attention;
  alpha = scores;
  LogSoftmaxInPlace(alpha);
  for (double &a : alpha) a = std::exp(a);

  tr.mu.assign(D, 0.0);
  for (std::size_t t = 0; t < T_; ++t)
    for (std::size_t j = 0; j < D; ++j) tr.mu[j] += alpha[t] * tr.x(t, j);
  tr.sigma.assign(D, 0.0);
  for (std::size_t t = 0; t < T_; ++t)
    for (std::size_t j = 0; j < D; ++j) {
      const double d = tr.x(t, j) - tr.mu[j];
      tr.sigma[j] += alpha[t] * d * d;
    }
  for (double &s : tr.sigma) s = std::sqrt(s + kStdEpsilon);

  auto &pooled = tr.out.pooled;
  pooled = tr.mu;
  if (cfg.pooling == Pooling::kMeanStd) pooled.insert(pooled.end(), tr.sigma.begin(), tr.sigma.end());

  auto &lp = tr.out.log_probs;
  lp.assign(C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    double acc = p.cls_b[c];
    for (std::size_t j = 0; j < pooled.size(); ++j) acc += double(p.cls_w(c, j)) * pooled[j];
    lp[c] = acc;
  }
  LogSoftmaxInPlace(lp);
  return tr;
}

}  // namespace detail

template <typename T>
HeadOutput Forward(const HeadParameters<T> &p, const Matrix<float> &frames) {
  return detail::ForwardImpl(p, frames).out;
}

template <typename T>
HeadOutput Forward(const HeadParameters<T> &p, const EmbeddingSequence &e) {
  return Forward(p, e.frames);
}

/// Label-smoothing target: (1 - eps) * onehot(label) + eps / C.
inline std::vector<double> SmoothedTarget(std::size_t num_classes, std::size_t label, double smoothing) {
  std::vector<double> q(num_classes, smoothing / static_cast<double>(num_classes));
  q[label] += 1.0 - smoothing;
  return q;
}

struct LossValue {
  double loss = 0.0;
  std::vector<double> grad_log_probs;  // d loss / d log_probs = -q
};

/// Cross-entropy against the smoothed target; smoothing 0 is plain NLL.
inline LossValue NllLoss(std::span<const double> log_probs, std::size_t label, double smoothing = 0.0) {
  if (label >= log_probs.size())
    throw DataError("nll_loss: label " + std::to_string(label) + " out of range");
  if (!(smoothing >= 0.0 && smoothing < 1.0))
    throw DataError("nll_loss: smoothing must lie in [0, 1)");
  const auto q = SmoothedTarget(log_probs.size(), label, smoothing);
  LossValue v;
  v.grad_log_probs.resize(q.size());
  for (std::size_t c = 0; c < q.size(); ++c) {
    if (q[c] != 0.0) v.loss -= q[c] * log_probs[c];
    v.grad_log_probs[c] = -q[c];
  }
  return v;
}

inline LossValue NllLoss(const HeadOutput &out, std::size_t label, double smoothing = 0.0) {
  return NllLoss(out.log_probs, label, smoothing);
}

struct HeadGradients {
  double loss = 0.0;
  HeadOutput output;
  HeadParameters<double> grads;
};

/// Loss and exact gradients with respect to every parameter.
template <typename T>
HeadGradients Backward(const HeadParameters<T> &p, const Matrix<float> &frames,
                       std::size_t label, double smoothing = 0.0) {
  const auto &cfg = p.config;
  auto tr = detail::ForwardImpl(p, frames);
  const auto lv = NllLoss(tr.out, label, smoothing);

  const std::size_t T_ = frames.rows(), D = cfg.dim, A = cfg.attention_dim, C = cfg.num_classes;
  const std::size_t P = cfg.pooled_dim();
  HeadGradients g;
  g.loss = lv.loss;
  g.grads = HeadParameters<double>(cfg);

  // Classifier: d loss / d logits = softmax(logits) - q.
  const auto q = SmoothedTarget(C, label, smoothing);
  std::vector<double> dz(C);
  for (std::size_t c = 0; c < C; ++c) dz[c] = std::exp(tr.out.log_probs[c]) - q[c];
  std::vector<double> dpooled(P, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    g.grads.cls_b[c] = dz[c];
    for (std::size_t j = 0; j < P; ++j) {
      g.grads.cls_w(c, j) = dz[c] * tr.out.pooled[j];
      dpooled[j] += double(p.cls_w(c, j)) * dz[c];
    }
  }

  // Pooling. var_j = sum_t alpha_t (x_tj - mu_j)^2; its partial in mu_j
  // vanishes because the weights sum to one.
  const auto &alpha = tr.out.attention;
  std::vector<double> dmu(dpooled.begin(), dpooled.begin() + static_cast<std::ptrdiff_t>(D));
  std::vector<double> dvar(D, 0.0);
  if (cfg.pooling == Pooling::kMeanStd)
    for (std::size_t j = 0; j < D; ++j) dvar[j] = dpooled[D + j] / (2.0 * tr.sigma[j]);

  Matrix<double> dx(T_, D);
  std::vector<double> dalpha(T_, 0.0);
  for (std::size_t t = 0; t < T_; ++t) {
    double acc = 0.0;
    for (std::size_t j = 0; j < D; ++j) {
      const double diff = tr.x(t, j) - tr.mu[j];
      acc += dmu[j] * tr.x(t, j) + dvar[j] * diff * diff;
      dx(t, j) = alpha[t] * (dmu[j] + 2.0 * dvar[j] * diff);
    }
    dalpha[t] = acc;
  }

  // Softmax over scores.
  double weighted = 0.0;
  for (std::size_t t = 0; t < T_; ++t) weighted += alpha[t] * dalpha[t];
  for (std::size_t t = 0; t < T_; ++t) {
    const double ds = alpha[t] * (dalpha[t] - weighted);
    for (std::size_t a = 0; a < A; ++a) {
      const double u = tr.hidden(t, a);
      g.grads.att_v[a] += ds * u;
      const double dpre = ds * double(p.att_v[a]) * (1.0 - u * u);
      g.grads.att_b[a] += dpre;
      for (std::size_t j = 0; j < D; ++j) {
        g.grads.att_w(a, j) += dpre * tr.x(t, j);
        dx(t, j) += dpre * double(p.att_w(a, j));
      }
    }
  }

  if (cfg.adapter) {
    for (std::size_t t = 0; t < T_; ++t)
      for (std::size_t i = 0; i < D; ++i) {
        g.grads.adapter_b[i] += dx(t, i);
        for (std::size_t j = 0; j < D; ++j) g.grads.adapter_w(i, j) += dx(t, i) * frames(t, j);
      }
  }
  g.output = std::move(tr.out);
  return g;
}

template <typename T>
std::size_t Predict(const HeadParameters<T> &p, const Matrix<float> &frames) {
  const auto out = Forward(p, frames);
  return static_cast<std::size_t>(
      std::max_element(out.log_probs.begin(), out.log_probs.end()) - out.log_probs.begin());
}

/// FNV-1a digest over the float32 bit patterns of the selected tensors.
inline std::uint64_t TensorChecksum(const HeadParameters<float> &p,
                                    const std::function<bool(std::string_view)> &select) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  p.ForEachTensor([&](const char *name, std::span<const float> v, LrGroup) {
    if (!select(name)) return;
    h = Fnv1a(name, h);
    h = Fnv1a(std::string_view(reinterpret_cast<const char *>(v.data()), v.size() * sizeof(float)), h);
  });
  return h;
}

// ---------------------------------------------------------------------------
// HEAD checkpoint:
//   "HEAD" | version u32 | D | A | C | pooling | adapter (u32 each)
//   | C x (code length u32, code bytes)
//   | tensors in ForEachTensor order, float32
// Little-endian throughout.

inline constexpr std::uint32_t kHeadVersion = 1;

inline void EncodeHeadTo(std::string &out, const HeadParameters<float> &p, const Registry &registry) {
  if (registry.size() != p.config.num_classes)
    throw DataError("head checkpoint: registry size does not match class count");
  out += "HEAD";
  le::PutU32(out, kHeadVersion);
  le::PutU32(out, static_cast<std::uint32_t>(p.config.dim));
  le::PutU32(out, static_cast<std::uint32_t>(p.config.attention_dim));
  le::PutU32(out, static_cast<std::uint32_t>(p.config.num_classes));
  le::PutU32(out, static_cast<std::uint32_t>(p.config.pooling));
  le::PutU32(out, p.config.adapter ? 1u : 0u);
  for (const auto &l : registry.labels()) {
    le::PutU32(out, static_cast<std::uint32_t>(l.code.size()));
    out += l.code;
  }
  p.ForEachTensor([&](const char *, std::span<const float> v, LrGroup) {
    for (float x : v) le::PutF32(out, x);
  });
}

/// Sequential little-endian reader with bounds checks.
class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string name) : bytes_(bytes), name_(std::move(name)) {}

  void Need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw DataError(name_ + ": truncated");
  }
  std::string_view Take(std::size_t n) {
    Need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t U32() { return le::GetU32(reinterpret_cast<const unsigned char *>(Take(4).data())); }
  float F32() { return std::bit_cast<float>(U32()); }
  std::uint64_t U64() {
    const std::uint64_t lo = U32();
    return lo | (static_cast<std::uint64_t>(U32()) << 32);
  }
  double F64() { return std::bit_cast<double>(U64()); }
  bool AtEnd() const { return pos_ == bytes_.size(); }
  const std::string &name() const { return name_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
  std::string name_;
};

struct HeadCheckpoint {
  HeadParameters<float> params;
  Registry registry;
};

inline HeadCheckpoint DecodeHeadFrom(ByteReader &in) {
  if (in.Take(4) != "HEAD") throw DataError(in.name() + ": bad magic (expected HEAD)");
  const auto version = in.U32();
  if (version != kHeadVersion) throw DataError(in.name() + ": unsupported version " + std::to_string(version));
  HeadConfig cfg;
  cfg.dim = in.U32();
  cfg.attention_dim = in.U32();
  cfg.num_classes = in.U32();
  const auto pooling = in.U32();
  if (pooling != 1 && pooling != 2) throw DataError(in.name() + ": bad pooling tag");
  cfg.pooling = static_cast<Pooling>(pooling);
  cfg.adapter = in.U32() != 0;
  if (cfg.dim == 0 || cfg.attention_dim == 0 || cfg.num_classes < 2)
    throw DataError(in.name() + ": invalid dimensions");
  std::vector<DialectLabel> labels;
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    const auto len = in.U32();
    const auto code = std::string(in.Take(len));
    labels.push_back({code, code});
  }
  HeadCheckpoint ck{HeadParameters<float>(cfg), Registry(std::move(labels))};
  ck.params.ForEachTensor([&](const char *name, std::span<float> v, LrGroup) {
    for (auto &x : v) {
      x = in.F32();
      if (!std::isfinite(x)) throw DataError(in.name() + ": non-finite value in " + name);
    }
  });
  return ck;
}

inline std::string EncodeHead(const HeadParameters<float> &p, const Registry &registry) {
  std::string out;
  EncodeHeadTo(out, p, registry);
  return out;
}

inline HeadCheckpoint DecodeHead(std::string_view bytes, const std::string &name = "<memory>") {
  ByteReader in(bytes, name);
  auto ck = DecodeHeadFrom(in);
  if (!in.AtEnd()) throw DataError(name + ": trailing bytes");
  return ck;
}

}  // namespace dialect_bench

#endif  // DIALECT_BENCH_HEAD_HPP_
