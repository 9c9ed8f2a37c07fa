// asrfuse/ssl/synthetic.hpp

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

#ifndef ASRFUSE_SSL_SYNTHETIC_HPP_
#define ASRFUSE_SSL_SYNTHETIC_HPP_

#include <string>
#include <vector>

#include "asrfuse/bottleneck/feature_sequence.hpp"

namespace asrfuse {

/// One utterance of synthetic "speech": token segments rendered as noisy
/// filter-bank-like frames.
struct TokenUtterance {
  std::string utt_id;
  FeatureSequence features;
  std::vector<std::size_t> frame_tokens;  // token per frame, 1-based
  std::vector<std::size_t> labels;        // segment tokens, 1-based
};

struct TokenCorpusOptions {
  std::size_t num_utterances = 10;
  std::size_t num_frames = 40;
  std::size_t feature_dim = 40;
  std::size_t num_tokens = 8;
  std::size_t min_duration = 2;
  std::size_t max_duration = 6;
  double noise = 0.3;
  double frame_period_ms = 20.0;
};

/// Token inventory "t1".."tN"; index 0 is reserved for the CTC blank.
inline std::vector<std::string> TokenInventory(std::size_t num_tokens) {
  std::vector<std::string> inv{"<blk>"};
  for (std::size_t i = 1; i <= num_tokens; ++i) inv.push_back("t" + std::to_string(i));
  return inv;
}

/// Segments of random tokens (no immediate repeats) with random durations.
/// Every token owns a fixed random prototype frame; frames are prototype plus
/// Gaussian noise.
inline std::vector<TokenUtterance> GenerateTokenCorpus(std::uint64_t seed,
                                                       const TokenCorpusOptions &o) {
  if (o.num_tokens < 2) FailValidation("GenerateTokenCorpus: need at least two tokens");
  if (o.min_duration == 0 || o.max_duration < o.min_duration)
    FailValidation("GenerateTokenCorpus: invalid duration range");
  Rng rng(seed);
  Tensor prototypes = Tensor::RandomNormal(o.num_tokens + 1, o.feature_dim, 1.0, &rng);
  std::vector<TokenUtterance> corpus;
  for (std::size_t u = 0; u < o.num_utterances; ++u) {
    TokenUtterance utt;
    utt.utt_id = "utt" + std::to_string(u);
    Tensor frames = Tensor::Matrix(o.num_frames, o.feature_dim);
    std::size_t prev = 0;
    while (utt.frame_tokens.size() < o.num_frames) {
      std::size_t tok;
      do {
        tok = 1 + rng.Index(o.num_tokens);
      } while (tok == prev);
      prev = tok;
      const std::size_t dur = o.min_duration + rng.Index(o.max_duration - o.min_duration + 1);
      for (std::size_t k = 0; k < dur && utt.frame_tokens.size() < o.num_frames; ++k)
        utt.frame_tokens.push_back(tok);
      utt.labels.push_back(tok);
    }
    for (std::size_t t = 0; t < o.num_frames; ++t)
      for (std::size_t j = 0; j < o.feature_dim; ++j)
        frames(t, j) = prototypes(utt.frame_tokens[t], j) + o.noise * rng.Normal();
    utt.features = FeatureSequence(std::move(frames), o.frame_period_ms, FeatureKind::kFbk);
    corpus.push_back(std::move(utt));
  }
  return corpus;
}

}  // namespace asrfuse

#endif  // ASRFUSE_SSL_SYNTHETIC_HPP_
