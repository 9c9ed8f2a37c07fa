// asrfuse/ssl/masking.hpp

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

#ifndef ASRFUSE_SSL_MASKING_HPP_
#define ASRFUSE_SSL_MASKING_HPP_

#include <algorithm>
#include <vector>

#include "asrfuse/numcore/error.hpp"
#include "asrfuse/numcore/rng.hpp"

namespace asrfuse {

/// Span masking: every frame starts a span with probability `start_prob`;
/// spans cover `span` frames and may overlap or run off the end.
struct MaskSpec {
  double start_prob = 0.065;
  std::size_t span = 10;
  // Forces at least this many spans so the masked set is usable by a loss.
  std::size_t min_spans = 1;

  void Validate() const {
    if (start_prob < 0.0 || start_prob > 1.0)
      FailValidation("MaskSpec: start probability must be in [0, 1], got ", start_prob);
    if (span == 0) FailValidation("MaskSpec: span must be positive");
  }
};

/// Raw span starts (Bernoulli per frame), sorted.
inline std::vector<std::size_t> SampleMaskStarts(std::size_t num_frames, double start_prob,
                                                 Rng *rng) {
  std::vector<std::size_t> starts;
  for (std::size_t t = 0; t < num_frames; ++t)
    if (rng->Bernoulli(start_prob)) starts.push_back(t);
  return starts;
}

/// Sorted, de-duplicated masked frame indices.
inline std::vector<std::size_t> ComputeMask(std::size_t num_frames, const MaskSpec &spec,
                                            Rng *rng) {
  spec.Validate();
  std::vector<std::size_t> starts = SampleMaskStarts(num_frames, spec.start_prob, rng);
  const std::size_t wanted = std::min(spec.min_spans, num_frames);
  while (starts.size() < wanted) {
    const std::size_t s = rng->Index(num_frames);
    if (std::find(starts.begin(), starts.end(), s) == starts.end()) starts.push_back(s);
  }
  std::vector<char> masked(num_frames, 0);
  for (std::size_t s : starts)
    for (std::size_t t = s; t < std::min(num_frames, s + spec.span); ++t) masked[t] = 1;
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < num_frames; ++t)
    if (masked[t]) out.push_back(t);
  return out;
}

}  // namespace asrfuse

#endif  // ASRFUSE_SSL_MASKING_HPP_
