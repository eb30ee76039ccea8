// dialect_bench/augment.hpp

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

#ifndef DIALECT_BENCH_AUGMENT_HPP_
#define DIALECT_BENCH_AUGMENT_HPP_

#include <cmath>
#include <limits>
#include <vector>

#include "dialect_bench/common.hpp"
#include "dialect_bench/corpus.hpp"
#include "dialect_bench/dsp.hpp"

namespace dialect_bench {

struct FreqMaskSpec {
  int n_masks = 2;
  int max_width_bins = 15;
};

struct ChunkDropSpec {
  int n_chunks = 2;
  double chunk_len_s = 0.1;
};

struct AugmentSpec {
  double snr_db_lo = 0.0;
  double snr_db_hi = 15.0;
  std::vector<double> speed_factors{0.9, 1.0, 1.1};
  FreqMaskSpec freq_mask;
  ChunkDropSpec chunk_drop;
  int copies = 1;  // augmented copies emitted per source utterance
  std::uint64_t seed = 0;

  void Validate(int n_mels) const {
    if (!(snr_db_lo <= snr_db_hi)) throw DataError("augment: snr range lo > hi");
    if (speed_factors.empty()) throw DataError("augment: no speed factors");
    for (double f : speed_factors)
      if (!(f > 0.0)) throw DataError("augment: speed factors must be positive");
    if (freq_mask.n_masks < 0 || freq_mask.max_width_bins < 0)
      throw DataError("augment: negative frequency mask parameters");
    if (freq_mask.max_width_bins >= n_mels)
      throw DataError("augment: max mask width must be below n_mels");
    if (chunk_drop.n_chunks < 0 || chunk_drop.chunk_len_s < 0.0)
      throw DataError("augment: negative chunk dropout parameters");
    if (copies < 0) throw DataError("augment: negative copy count");
  }
};

/// Only these splits are ever augmented.
inline bool IsAugmentableSplit(Split s) {
  return s == Split::kTrain || s == Split::kAdaptation;
}

namespace detail {

inline double MeanPower(std::span<const float> x) {
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * v;
  return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

}  // namespace detail

/// Noise tiled (or truncated) to the signal length.
inline std::vector<float> FitNoise(const Waveform &noise, std::size_t len) {
  if (noise.samples.empty()) throw DataError("add_noise: empty noise");
  std::vector<float> out(len);
  for (std::size_t i = 0; i < len; ++i) out[i] = noise.samples[i % noise.samples.size()];
  return out;
}

/// Gain applied to the fitted noise so the mixture hits `snr_db`.
inline double NoiseGain(const Waveform &w, const Waveform &noise, double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  const double ps = detail::MeanPower(w.samples);
  const double pn = detail::MeanPower(FitNoise(noise, w.size()));
  if (!(ps > 0.0)) throw DataError("add_noise: signal has zero power");
  if (!(pn > 0.0)) throw DataError("add_noise: noise has zero power");
  return std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
}

/// out = w + g * noise, with g chosen from the full-length powers.
/// snr_db = +inf returns the input unchanged.
inline Waveform AddNoise(const Waveform &w, const Waveform &noise, double snr_db) {
  if (noise.sample_rate_hz != w.sample_rate_hz)
    throw DataError("add_noise: sample rate mismatch");
  if (std::isinf(snr_db) && snr_db > 0) return w;
  const double g = NoiseGain(w, noise, snr_db);
  const auto fitted = FitNoise(noise, w.size());
  Waveform out = w;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.samples[i] = static_cast<float>(static_cast<double>(w.samples[i]) + g * fitted[i]);
  return out;
}

/// Speed perturbation: the input is read as if recorded at rate * factor and
/// resampled back to rate, so duration scales by 1/factor and pitch by factor.
inline Waveform SpeedPerturb(const Waveform &w, double factor) {
  if (!(factor > 0.0)) throw DataError("speed_perturb: factor must be positive");
  if (factor == 1.0) return w;
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(w.size()) / factor));
  Waveform out;
  out.sample_rate_hz = w.sample_rate_hz;
  out.samples = detail::SincInterpolate(w.samples, factor, out_len,
                                        std::min(1.0, 1.0 / factor));
  return out;
}

inline float SpectrogramMean(const MelSpectrogram &s) {
  double acc = 0.0;
  for (float v : s.frames.data()) acc += v;
  return s.frames.empty() ? 0.0f
                          : static_cast<float>(acc / static_cast<double>(s.frames.data().size()));
}

/// Sets mel bins [first, first + width) of every frame to `fill`.
inline void ApplyFreqMask(MelSpectrogram &s, std::size_t first, std::size_t width, float fill) {
  const std::size_t end = std::min(s.n_mels(), first + width);
  for (std::size_t t = 0; t < s.num_frames(); ++t)
    for (std::size_t m = first; m < end; ++m) s.frames(t, m) = fill;
}

struct MaskDraw {
  std::size_t first;
  std::size_t width;
};

inline MaskDraw DrawFreqMask(std::size_t n_mels, int max_width, Rng &rng) {
  const auto width = static_cast<std::size_t>(rng.IntInclusive(0, max_width));
  const auto first = static_cast<std::size_t>(
      rng.IntInclusive(0, static_cast<std::int64_t>(n_mels - width)));
  return {first, width};
}

/// SpecAugment-style frequency masking, filled with the mean of the input.
inline MelSpectrogram FreqMask(const MelSpectrogram &s, int n_masks, int max_width, Rng &rng) {
  if (max_width < 0 || static_cast<std::size_t>(max_width) >= s.n_mels())
    throw DataError("freq_mask: max width must be below n_mels");
  MelSpectrogram out = s;
  const float fill = SpectrogramMean(s);
  for (int i = 0; i < n_masks; ++i) {
    const auto draw = DrawFreqMask(s.n_mels(), max_width, rng);
    ApplyFreqMask(out, draw.first, draw.width, fill);
  }
  return out;
}

inline std::size_t ChunkSamples(const Waveform &w, double chunk_len_s) {
  return static_cast<std::size_t>(std::llround(chunk_len_s * w.sample_rate_hz));
}

/// Start offsets of `n_chunks` chunks; overlaps are allowed.
inline std::vector<std::size_t> DrawChunkOffsets(const Waveform &w, int n_chunks,
                                                 double chunk_len_s, Rng &rng) {
  const std::size_t len = ChunkSamples(w, chunk_len_s);
  if (len > w.size()) throw DataError("chunk_dropout: chunk longer than signal");
  std::vector<std::size_t> offsets;
  for (int i = 0; i < n_chunks; ++i)
    offsets.push_back(static_cast<std::size_t>(
        rng.IntInclusive(0, static_cast<std::int64_t>(w.size() - len))));
  return offsets;
}

/// Zeroes `n_chunks` time-domain chunks at seeded offsets.
inline Waveform ChunkDropout(const Waveform &w, int n_chunks, double chunk_len_s, Rng &rng) {
  const auto offsets = DrawChunkOffsets(w, n_chunks, chunk_len_s, rng);
  const std::size_t len = ChunkSamples(w, chunk_len_s);
  Waveform out = w;
  for (auto off : offsets)
    std::fill(out.samples.begin() + static_cast<std::ptrdiff_t>(off),
              out.samples.begin() + static_cast<std::ptrdiff_t>(off + len), 0.0f);
  return out;
}

/// One augmented view of an utterance: random speed, optional noise at a
/// random SNR, chunk dropout, log-mel, then frequency masking. Noise is
/// skipped when the pool is empty; chunk dropout is skipped when the chunk
/// does not fit in the (perturbed) signal.
inline MelSpectrogram AugmentedLogMel(const Waveform &w, std::span<const Waveform> noise_pool,
                                      const AugmentSpec &spec, const FrontendConfig &frontend,
                                      Rng &rng) {
  const double factor = spec.speed_factors[rng.Index(spec.speed_factors.size())];
  Waveform x = SpeedPerturb(w, factor);
  if (!noise_pool.empty()) {
    const auto &noise = noise_pool[rng.Index(noise_pool.size())];
    const double snr = rng.Uniform(spec.snr_db_lo, spec.snr_db_hi);
    if (detail::MeanPower(x.samples) > 0.0) x = AddNoise(x, noise, snr);
  }
  if (ChunkSamples(x, spec.chunk_drop.chunk_len_s) <= x.size())
    x = ChunkDropout(x, spec.chunk_drop.n_chunks, spec.chunk_drop.chunk_len_s, rng);
  MelSpectrogram mel = LogMel(x, frontend);
  return FreqMask(mel, spec.freq_mask.n_masks, spec.freq_mask.max_width_bins, rng);
}

}  // namespace dialect_bench

#endif  // DIALECT_BENCH_AUGMENT_HPP_
