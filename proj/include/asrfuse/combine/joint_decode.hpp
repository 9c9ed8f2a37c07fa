// asrfuse/combine/joint_decode.hpp

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

#ifndef ASRFUSE_COMBINE_JOINT_DECODE_HPP_
#define ASRFUSE_COMBINE_JOINT_DECODE_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "asrfuse/combine/weights.hpp"
#include "asrfuse/numcore/tensor.hpp"

namespace asrfuse {

/// Per-frame token log-likelihoods of one system for one utterance.
struct FrameScoreStream {
  std::string utt_id;
  std::vector<std::string> inventory;
  Tensor scores;  // T x |inventory|
  double frame_period_ms = 10.0;

  std::size_t num_frames() const { return scores.rows(); }

  void Validate() const {
    if (inventory.empty()) FailValidation("FrameScoreStream '", utt_id, "': empty inventory");
    if (scores.rows() == 0) FailValidation("FrameScoreStream '", utt_id, "': no frames");
    if (scores.cols() != inventory.size())
      FailValidation("FrameScoreStream '", utt_id, "': ", scores.cols(), " score columns for ",
                     inventory.size(), " tokens");
    if (!(frame_period_ms > 0.0))
      FailValidation("FrameScoreStream '", utt_id, "': frame period must be > 0");
    for (std::size_t t = 0; t < scores.rows(); ++t)
      for (double v : scores.Row(t))
        if (!std::isfinite(v))
          FailValidation("FrameScoreStream '", utt_id, "': non-finite score at frame ", t);
  }
};

struct JointDecodeResult {
  FrameScoreStream fused;
  std::vector<std::size_t> best;  // per-frame argmax token index
};

/// Lowest index wins among equal maxima.
inline std::vector<std::size_t> FrameArgmax(const Tensor &scores) {
  std::vector<std::size_t> best(scores.rows(), 0);
  for (std::size_t t = 0; t < scores.rows(); ++t) {
    auto row = scores.Row(t);
    for (std::size_t v = 1; v < row.size(); ++v)
      if (row[v] > row[best[t]]) best[t] = v;
  }
  return best;
}

/// Fused score sum_k w_k log P_k per frame and token, plus the greedy
/// readout.  Weights are applied as given (not renormalized).
inline JointDecodeResult JointDecode(const std::vector<FrameScoreStream> &streams,
                                     const std::vector<double> &weights) {
  if (streams.empty()) FailValidation("JointDecode: empty stream list");
  if (weights.size() != streams.size())
    FailValidation("JointDecode: ", weights.size(), " weights for ", streams.size(), " streams");
  CombinationWeights::Positional(weights).Validate();
  const FrameScoreStream &ref = streams[0];
  for (std::size_t k = 0; k < streams.size(); ++k) {
    const FrameScoreStream &s = streams[k];
    s.Validate();
    if (k == 0) continue;
    const std::string who = internal::Concat("stream 1 ('", ref.utt_id, "') and stream ", k + 1,
                                             " ('", s.utt_id, "')");
    if (s.utt_id != ref.utt_id) FailValidation("JointDecode: utterance ids differ between ", who);
    if (s.inventory != ref.inventory)
      FailValidation("JointDecode: token inventories differ between ", who);
    if (s.num_frames() != ref.num_frames())
      FailValidation("JointDecode: frame counts differ between ", who, " (", ref.num_frames(),
                     " vs ", s.num_frames(), ")");
    if (s.frame_period_ms != ref.frame_period_ms)
      FailValidation("JointDecode: frame periods differ between ", who);
  }
  JointDecodeResult r;
  r.fused = ref;
  auto &out = r.fused.scores.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    double acc = weights[0] * streams[0].scores[i];
    for (std::size_t k = 1; k < streams.size(); ++k) acc += weights[k] * streams[k].scores[i];
    out[i] = acc;
  }
  r.best = FrameArgmax(r.fused.scores);
  return r;
}

/// Token strings of a frame-level readout with repeats merged and `blank`
/// removed (pass an empty blank to keep every symbol).
inline std::vector<std::string> CollapseReadout(const std::vector<std::size_t> &best,
                                                const std::vector<std::string> &inventory,
                                                const std::string &blank = "<blk>") {
  std::vector<std::string> out;
  for (std::size_t t = 0; t < best.size(); ++t) {
    if (t > 0 && best[t] == best[t - 1]) continue;
    const std::string &s = inventory.at(best[t]);
    if (!blank.empty() && s == blank) continue;
    out.push_back(s);
  }
  return out;
}

}  // namespace asrfuse

#endif  // ASRFUSE_COMBINE_JOINT_DECODE_HPP_
