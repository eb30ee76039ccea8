// dialect_bench/embedio.hpp

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

// FEMB: one utterance of frame-level embeddings per file.
//
//   offset  size     field
//   0       4        magic "FEMB"
//   4       4        version (u32, = 1)
//   8       4        dim D (u32)
//   12      4        frames T (u32)
//   16      4        utt_id length L (u32)
//   20      L        utt_id, UTF-8
//   20+L    4*T*D    float32 frames, row-major
//
// All integers and floats are little-endian.

#ifndef DIALECT_BENCH_EMBEDIO_HPP_
#define DIALECT_BENCH_EMBEDIO_HPP_

#include <filesystem>
#include <map>
#include <string>

#include "dialect_bench/common.hpp"

namespace dialect_bench {

struct EmbeddingSequence {
  std::string utt_id;
  Matrix<float> frames;  // T x D

  std::size_t num_frames() const { return frames.rows(); }
  std::size_t dim() const { return frames.cols(); }
};

inline constexpr std::uint32_t kFembVersion = 1;
inline constexpr std::size_t kFembHeaderBytes = 20;

enum class FembErrorCode { kBadMagic, kBadVersion, kTruncated, kTrailingData, kInvalid };

class FembError : public Error {
 public:
  FembError(FembErrorCode code, const std::string &what)
      : Error(ErrorKind::kData, what), code_(code) {}
  FembErrorCode code() const { return code_; }

 private:
  FembErrorCode code_;
};

inline void ValidateEmbedding(const EmbeddingSequence &e) {
  if (e.num_frames() == 0 || e.dim() == 0)
    throw FembError(FembErrorCode::kInvalid, "embedding '" + e.utt_id + "' is empty");
  for (float v : e.frames.data())
    if (!std::isfinite(v))
      throw FembError(FembErrorCode::kInvalid, "embedding '" + e.utt_id + "' has non-finite values");
}

inline std::string EncodeFemb(const EmbeddingSequence &e) {
  ValidateEmbedding(e);
  std::string out;
  out.reserve(kFembHeaderBytes + e.utt_id.size() + 4 * e.frames.data().size());
  out += "FEMB";
  le::PutU32(out, kFembVersion);
  le::PutU32(out, static_cast<std::uint32_t>(e.dim()));
  le::PutU32(out, static_cast<std::uint32_t>(e.num_frames()));
  le::PutU32(out, static_cast<std::uint32_t>(e.utt_id.size()));
  out += e.utt_id;
  for (float v : e.frames.data()) le::PutF32(out, v);
  return out;
}

inline EmbeddingSequence DecodeFemb(std::string_view bytes, const std::string &name = "<memory>") {
  const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
  if (bytes.size() < 4 || bytes.substr(0, 4) != "FEMB")
    throw FembError(FembErrorCode::kBadMagic, name + ": bad magic");
  if (bytes.size() < kFembHeaderBytes)
    throw FembError(FembErrorCode::kTruncated, name + ": truncated header");
  const std::uint32_t version = le::GetU32(p + 4);
  if (version != kFembVersion)
    throw FembError(FembErrorCode::kBadVersion,
                    name + ": unsupported version " + std::to_string(version));
  const std::uint64_t dim = le::GetU32(p + 8);
  const std::uint64_t frames = le::GetU32(p + 12);
  const std::uint64_t id_len = le::GetU32(p + 16);
  const std::uint64_t remaining = bytes.size() - kFembHeaderBytes;
  if (id_len > remaining)
    throw FembError(FembErrorCode::kTruncated, name + ": truncated utt_id");
  const std::uint64_t payload = 4 * dim * frames;
  if (payload > remaining - id_len)
    throw FembError(FembErrorCode::kTruncated,
                    name + ": declared " + std::to_string(frames) + "x" + std::to_string(dim) +
                        " frames exceed remaining bytes");
  if (payload < remaining - id_len)
    throw FembError(FembErrorCode::kTrailingData, name + ": trailing bytes after frames");

  EmbeddingSequence e;
  e.utt_id = std::string(bytes.substr(kFembHeaderBytes, id_len));
  e.frames = Matrix<float>(frames, dim);
  const unsigned char *data = p + kFembHeaderBytes + id_len;
  for (std::size_t i = 0; i < e.frames.data().size(); ++i) e.frames.data()[i] = le::GetF32(data + 4 * i);
  ValidateEmbedding(e);
  return e;
}

inline void WriteFemb(const EmbeddingSequence &e, const std::string &path) {
  WriteFileBytes(path, EncodeFemb(e));
}

inline EmbeddingSequence ReadFemb(const std::string &path) {
  return DecodeFemb(ReadFileBytes(path), path);
}

/// Directory layout: <dir>/<utt_id>.femb
inline std::filesystem::path FembPath(const std::filesystem::path &dir, const std::string &utt_id) {
  return dir / (utt_id + ".femb");
}

/// utt_id -> embedding lookup, either preloaded or backed by a directory.
/// Directory-backed lookups are cached after first read.
class FeatureStore {
 public:
  FeatureStore() = default;
  explicit FeatureStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void Put(EmbeddingSequence e) {
    auto id = e.utt_id;
    cache_.insert_or_assign(std::move(id), std::move(e));
  }

  bool Contains(const std::string &utt_id) const {
    if (cache_.count(utt_id)) return true;
    return !dir_.empty() && std::filesystem::exists(FembPath(dir_, utt_id));
  }

  const EmbeddingSequence &Get(const std::string &utt_id) {
    auto it = cache_.find(utt_id);
    if (it != cache_.end()) return it->second;
    if (dir_.empty()) throw DataError("missing features for " + utt_id);
    const auto path = FembPath(dir_, utt_id);
    if (!std::filesystem::exists(path))
      throw DataError("missing feature file " + path.string());
    EmbeddingSequence e = ReadFemb(path.string());
    if (e.utt_id != utt_id)
      throw DataError(path.string() + ": header utt_id '" + e.utt_id + "' does not match");
    return cache_.emplace(utt_id, std::move(e)).first->second;
  }

  std::size_t size() const { return cache_.size(); }

 private:
  std::filesystem::path dir_;
  std::map<std::string, EmbeddingSequence> cache_;
};

}  // namespace dialect_bench

#endif  // DIALECT_BENCH_EMBEDIO_HPP_
