// dialect_bench/dsp.hpp

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

#ifndef DIALECT_BENCH_DSP_HPP_
#define DIALECT_BENCH_DSP_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "dialect_bench/common.hpp"

namespace dialect_bench {

struct Waveform {
  std::vector<float> samples;
  int sample_rate_hz = 16000;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// ---------------------------------------------------------------------------
// WAV I/O. PCM 16-bit mono only.

inline Waveform ParseWav(std::string_view bytes, const std::string &name = "<memory>") {
  auto fail = [&](const std::string &why) { return DataError(name + ": " + why); };
  const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < 12) throw fail("truncated RIFF header");
  if (bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE")
    throw fail("not a RIFF/WAVE file");

  bool have_fmt = false;
  int channels = 0, bits = 0, sample_rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= n) {
    std::string_view id = bytes.substr(pos, 4);
    const std::uint32_t size = le::GetU32(p + pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (size < 16 || body + 16 > n) throw fail("truncated fmt chunk");
      const int format = p[body] | (p[body + 1] << 8);
      channels = p[body + 2] | (p[body + 3] << 8);
      sample_rate = static_cast<int>(le::GetU32(p + body + 4));
      bits = p[body + 14] | (p[body + 15] << 8);
      if (format != 1) throw fail("unsupported format tag " + std::to_string(format) + " (PCM required)");
      if (channels != 1) throw fail("expected 1 channel, got " + std::to_string(channels));
      if (bits != 16) throw fail("expected 16-bit samples, got " + std::to_string(bits));
      if (sample_rate <= 0) throw fail("invalid sample rate");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw fail("data chunk before fmt chunk");
      if (body + size > n) throw fail("truncated data chunk");
      Waveform w;
      w.sample_rate_hz = sample_rate;
      w.samples.resize(size / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const auto v = static_cast<std::int16_t>(p[body + 2 * i] | (p[body + 2 * i + 1] << 8));
        w.samples[i] = static_cast<float>(v) / 32768.0f;
      }
      return w;
    }
    pos = body + size + (size & 1);
  }
  throw fail(have_fmt ? "missing data chunk" : "truncated header (no fmt chunk)");
}

inline Waveform ReadWav(const std::string &path) { return ParseWav(ReadFileBytes(path), path); }

inline std::string EncodeWav(const Waveform &w) {
  std::string out;
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  out += "RIFF";
  le::PutU32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  le::PutU32(out, 16);
  out.push_back(1); out.push_back(0);  // PCM
  out.push_back(1); out.push_back(0);  // mono
  le::PutU32(out, static_cast<std::uint32_t>(w.sample_rate_hz));
  le::PutU32(out, static_cast<std::uint32_t>(w.sample_rate_hz * 2));
  out.push_back(2); out.push_back(0);
  out.push_back(16); out.push_back(0);
  out += "data";
  le::PutU32(out, data_bytes);
  for (float s : w.samples) {
    const long v = std::clamp(std::lround(static_cast<double>(s) * 32768.0), -32768L, 32767L);
    const auto u = static_cast<std::uint16_t>(static_cast<std::int16_t>(v));
    out.push_back(static_cast<char>(u & 0xFF));
    out.push_back(static_cast<char>(u >> 8));
  }
  return out;
}

inline void WriteWav(const Waveform &w, const std::string &path) {
  WriteFileBytes(path, EncodeWav(w));
}

// ---------------------------------------------------------------------------
// Band-limited resampling.

namespace detail {

/// Windowed-sinc interpolation. Output sample n is read at input position
/// n * step. `cutoff` is relative to the input Nyquist frequency. The kernel
/// keeps `zero_crossings` sinc lobes per side, so its support in input
/// samples widens as the cutoff drops. Sin/cos along the taps are advanced by
/// rotation rather than re-evaluated.
inline std::vector<float> SincInterpolate(std::span<const float> in, double step,
                                          std::size_t out_len, double cutoff,
                                          int zero_crossings = 64) {
  std::vector<float> out(out_len, 0.0f);
  if (in.empty()) return out;
  const double half_width = zero_crossings / cutoff;
  const double pi = std::numbers::pi;
  const auto last = static_cast<std::int64_t>(in.size()) - 1;

  for (std::size_t n = 0; n < out_len; ++n) {
    const double x = static_cast<double>(n) * step;
    const auto k_lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(x - half_width)));
    const auto k_hi = std::min<std::int64_t>(last, static_cast<std::int64_t>(std::floor(x + half_width)));
    if (k_lo > k_hi) continue;

    // t runs from x - k_lo down to x - k_hi in unit steps.
    const double t0 = x - static_cast<double>(k_lo);
    std::complex<double> sinc_phase = std::polar(1.0, pi * cutoff * t0);
    const std::complex<double> sinc_rot = std::polar(1.0, -pi * cutoff);
    std::complex<double> win_phase = std::polar(1.0, pi * t0 / half_width);
    const std::complex<double> win_rot = std::polar(1.0, -pi / half_width);

    double acc = 0.0;
    for (std::int64_t k = k_lo; k <= k_hi; ++k) {
      const double t = x - static_cast<double>(k);
      double h;
      if (std::abs(t) < 1e-9) {
        h = cutoff;
      } else {
        h = sinc_phase.imag() / (pi * t);
      }
      if (std::abs(t) < half_width) {
        h *= 0.5 * (1.0 + win_phase.real());
        acc += h * in[static_cast<std::size_t>(k)];
      }
      sinc_phase *= sinc_rot;
      win_phase *= win_rot;
    }
    out[n] = static_cast<float>(acc);
  }
  return out;
}

}  // namespace detail

/// Resamples to `target_hz`. Output length is round(len * target / source).
inline Waveform Resample(const Waveform &w, int target_hz) {
  if (target_hz <= 0) throw DataError("resample: target rate must be positive");
  if (target_hz == w.sample_rate_hz) return w;
  const double ratio = static_cast<double>(target_hz) / w.sample_rate_hz;
  const auto out_len = static_cast<std::size_t>(std::llround(w.size() * ratio));
  Waveform out;
  out.sample_rate_hz = target_hz;
  out.samples = detail::SincInterpolate(w.samples, 1.0 / ratio, out_len,
                                        std::min(1.0, ratio));
  return out;
}

// ---------------------------------------------------------------------------
// Log-mel frontend.

struct FrontendConfig {
  int sample_rate_hz = 16000;
  int n_fft = 400;
  int win_length = 400;
  int hop_length = 160;
  int n_mels = 128;
  double f_min = 0.0;
  double f_max = 8000.0;
  double log_floor = 1e-10;
  double dynamic_range = 8.0;
};

struct MelSpectrogram {
  Matrix<float> frames;  // T x n_mels
  double hop_s = 0.01;

  std::size_t num_frames() const { return frames.rows(); }
  std::size_t n_mels() const { return frames.cols(); }
};

inline double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular HTK-scale filterbank over the non-negative FFT bins.
class MelFilterbank {
 public:
  explicit MelFilterbank(const FrontendConfig &cfg)
      : n_bins_(static_cast<std::size_t>(cfg.n_fft / 2 + 1)),
        weights_(static_cast<std::size_t>(cfg.n_mels), n_bins_) {
    const double mel_lo = HzToMel(cfg.f_min), mel_hi = HzToMel(cfg.f_max);
    std::vector<double> edges(static_cast<std::size_t>(cfg.n_mels) + 2);
    for (std::size_t i = 0; i < edges.size(); ++i)
      edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(cfg.n_mels + 1));
    centers_.assign(edges.begin() + 1, edges.end() - 1);
    const double bin_hz = static_cast<double>(cfg.sample_rate_hz) / cfg.n_fft;
    for (std::size_t m = 0; m < weights_.rows(); ++m) {
      const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
      for (std::size_t k = 0; k < n_bins_; ++k) {
        const double f = static_cast<double>(k) * bin_hz;
        const double up = (f - left) / (center - left);
        const double down = (right - f) / (right - center);
        weights_(m, k) = std::max(0.0, std::min(up, down));
      }
    }
  }

  const std::vector<double> &centers_hz() const { return centers_; }
  const Matrix<double> &weights() const { return weights_; }
  std::size_t n_bins() const { return n_bins_; }

 private:
  std::size_t n_bins_;
  Matrix<double> weights_;
  std::vector<double> centers_;
};

inline std::size_t NumFrames(std::size_t len, int win, int hop) {
  if (len < static_cast<std::size_t>(win)) return 0;
  return 1 + (len - static_cast<std::size_t>(win)) / static_cast<std::size_t>(hop);
}

/// Power spectrogram through the mel filterbank, then log10 with a floor.
/// No clamping or normalization.
inline Matrix<double> LogMelEnergies(const Waveform &w, const FrontendConfig &cfg = {}) {
  if (w.sample_rate_hz != cfg.sample_rate_hz)
    throw DataError("log_mel: expected " + std::to_string(cfg.sample_rate_hz) +
                    " Hz input, got " + std::to_string(w.sample_rate_hz));
  const std::size_t frames = NumFrames(w.size(), cfg.win_length, cfg.hop_length);
  if (frames == 0) throw DataError("log_mel: waveform shorter than one analysis window");

  const MelFilterbank fb(cfg);
  std::vector<double> window(static_cast<std::size_t>(cfg.win_length));
  for (std::size_t i = 0; i < window.size(); ++i)  // periodic Hann
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                     static_cast<double>(cfg.win_length));

  Eigen::FFT<double> fft;
  std::vector<double> buf(static_cast<std::size_t>(cfg.n_fft), 0.0);
  std::vector<std::complex<double>> spec;
  std::vector<double> power(fb.n_bins());
  Matrix<double> out(frames, static_cast<std::size_t>(cfg.n_mels));

  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * static_cast<std::size_t>(cfg.hop_length);
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < window.size(); ++i)
      buf[i] = static_cast<double>(w.samples[start + i]) * window[i];
    fft.fwd(spec, buf);
    for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(spec[k]);
    for (std::size_t m = 0; m < out.cols(); ++m) {
      const auto wrow = fb.weights().row(m);
      double e = 0.0;
      for (std::size_t k = 0; k < power.size(); ++k) e += wrow[k] * power[k];
      out(t, m) = std::log10(std::max(e, cfg.log_floor));
    }
  }
  return out;
}

/// Normalized log-mel: clamp to [max - dynamic_range, max]
/// over the whole utterance, then (x + 4) / 4.
inline MelSpectrogram LogMel(const Waveform &w, const FrontendConfig &cfg = {}) {
  Matrix<double> energies = LogMelEnergies(w, cfg);
  const double peak = *std::max_element(energies.data().begin(), energies.data().end());
  const double floor = peak - cfg.dynamic_range;
  MelSpectrogram out;
  out.hop_s = static_cast<double>(cfg.hop_length) / cfg.sample_rate_hz;
  out.frames = Matrix<float>(energies.rows(), energies.cols());
  for (std::size_t i = 0; i < energies.data().size(); ++i)
    out.frames.data()[i] =
        static_cast<float>((std::max(energies.data()[i], floor) + 4.0) / 4.0);
  return out;
}

}  // namespace dialect_bench

#endif  // DIALECT_BENCH_DSP_HPP_
