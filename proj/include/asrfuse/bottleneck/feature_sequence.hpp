// asrfuse/bottleneck/feature_sequence.hpp

// Copyright 2026  The asrfuse Authors

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

#ifndef ASRFUSE_BOTTLENECK_FEATURE_SEQUENCE_HPP_
#define ASRFUSE_BOTTLENECK_FEATURE_SEQUENCE_HPP_

#include <cmath>
#include <string>
#include <utility>

#include "asrfuse/numcore/tensor.hpp"

namespace asrfuse {

enum class FeatureKind { kFbk, kSsl, kUti, kFused };

inline const char *FeatureKindName(FeatureKind k) {
  switch (k) {
    case FeatureKind::kFbk: return "FBK";
    case FeatureKind::kSsl: return "SSL";
    case FeatureKind::kUti: return "UTI";
    case FeatureKind::kFused: return "fused";
  }
  return "?";
}

inline FeatureKind ParseFeatureKind(const std::string &s) {
  if (s == "FBK" || s == "fbk") return FeatureKind::kFbk;
  if (s == "SSL" || s == "ssl") return FeatureKind::kSsl;
  if (s == "UTI" || s == "uti") return FeatureKind::kUti;
  if (s == "fused") return FeatureKind::kFused;
  FailValidation("unknown feature kind '", s, "'");
}

/// T x D frame matrix with its frame period.
struct FeatureSequence {
  Tensor frames;
  double frame_period_ms = 10.0;
  FeatureKind kind = FeatureKind::kFbk;

  FeatureSequence() = default;
  FeatureSequence(Tensor f, double period_ms, FeatureKind k)
      : frames(std::move(f)), frame_period_ms(period_ms), kind(k) {
    Validate();
  }

  std::size_t num_frames() const { return frames.rows(); }
  std::size_t dim() const { return frames.cols(); }

  void Validate() const {
    if (frames.rank() != 2)
      FailValidation("FeatureSequence: frames must be a matrix, got ", frames.ShapeString());
    if (!(frame_period_ms > 0.0) || !std::isfinite(frame_period_ms))
      FailValidation("FeatureSequence: frame period must be positive, got ", frame_period_ms);
    if (!frames.AllFinite()) FailValidation("FeatureSequence: non-finite frame values");
  }
};

namespace internal {

inline bool IsIntegerRatio(double ratio, std::size_t *out) {
  const double r = std::round(ratio);
  if (r < 1.0 || std::abs(ratio - r) > 1e-9 * ratio) return false;
  *out = static_cast<std::size_t>(r);
  return true;
}

}  // namespace internal

/// Frame-wise concatenation [a | b].  Both streams must already share frame
/// count and period; a stream with zero columns is the identity.
inline FeatureSequence FuseFeatures(const FeatureSequence &a, const FeatureSequence &b,
                                    const std::string &a_name = "a",
                                    const std::string &b_name = "b") {
  if (b.dim() == 0 && (b.num_frames() == 0 || b.num_frames() == a.num_frames())) return a;
  if (a.dim() == 0 && (a.num_frames() == 0 || a.num_frames() == b.num_frames())) return b;
  if (a.num_frames() != b.num_frames())
    FailValidation("FuseFeatures: frame count mismatch between '", a_name, "' (",
                   a.num_frames(), ") and '", b_name, "' (", b.num_frames(), ")");
  if (std::abs(a.frame_period_ms - b.frame_period_ms) > 1e-9)
    FailValidation("FuseFeatures: frame period mismatch between '", a_name, "' (",
                   a.frame_period_ms, " ms) and '", b_name, "' (", b.frame_period_ms, " ms)");
  const std::size_t t = a.num_frames(), da = a.dim(), db = b.dim();
  Tensor out = Tensor::Matrix(t, da + db);
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j < da; ++j) out(i, j) = a.frames(i, j);
    for (std::size_t j = 0; j < db; ++j) out(i, da + j) = b.frames(i, j);
  }
  return FeatureSequence(std::move(out), a.frame_period_ms, FeatureKind::kFused);
}

/// Changes the frame period by an integer factor: upsampling repeats frames,
/// downsampling mean-pools windows (a trailing partial window is pooled over
/// the frames it has).
inline FeatureSequence ResampleFrames(const FeatureSequence &x, double target_period_ms) {
  if (!(target_period_ms > 0.0))
    FailValidation("ResampleFrames: target period must be positive, got ", target_period_ms);
  const double src = x.frame_period_ms;
  const std::size_t t = x.num_frames(), d = x.dim();
  std::size_t factor = 0;
  if (src >= target_period_ms) {
    if (!internal::IsIntegerRatio(src / target_period_ms, &factor))
      FailValidation("ResampleFrames: ", src, " ms and ", target_period_ms,
                     " ms are not commensurate");
    Tensor out = Tensor::Matrix(t * factor, d);
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t r = 0; r < factor; ++r)
        for (std::size_t j = 0; j < d; ++j) out(i * factor + r, j) = x.frames(i, j);
    return FeatureSequence(std::move(out), target_period_ms, x.kind);
  }
  if (!internal::IsIntegerRatio(target_period_ms / src, &factor))
    FailValidation("ResampleFrames: ", src, " ms and ", target_period_ms,
                   " ms are not commensurate");
  const std::size_t out_t = (t + factor - 1) / factor;
  Tensor out = Tensor::Matrix(out_t, d);
  for (std::size_t o = 0; o < out_t; ++o) {
    const std::size_t begin = o * factor;
    const std::size_t end = std::min(t, begin + factor);
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t i = begin; i < end; ++i) s += x.frames(i, j);
      out(o, j) = s / static_cast<double>(end - begin);
    }
  }
  return FeatureSequence(std::move(out), target_period_ms, x.kind);
}

}  // namespace asrfuse

#endif  // ASRFUSE_BOTTLENECK_FEATURE_SEQUENCE_HPP_
