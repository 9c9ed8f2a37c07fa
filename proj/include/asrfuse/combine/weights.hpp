// asrfuse/combine/weights.hpp

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

#ifndef ASRFUSE_COMBINE_WEIGHTS_HPP_
#define ASRFUSE_COMBINE_WEIGHTS_HPP_

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "asrfuse/numcore/error.hpp"

namespace asrfuse {

/// Named non-negative combination weights, one per stream or score source.
/// Ratios are kept as given; Normalized() rescales them to sum to one.
struct CombinationWeights {
  std::vector<std::string> names;
  std::vector<double> values;

  static CombinationWeights Positional(std::vector<double> v) {
    CombinationWeights w;
    for (std::size_t i = 0; i < v.size(); ++i) w.names.push_back("s" + std::to_string(i + 1));
    w.values = std::move(v);
    return w;
  }

  std::size_t size() const { return values.size(); }

  void Validate() const {
    if (names.size() != values.size())
      FailValidation("CombinationWeights: ", names.size(), " names for ", values.size(),
                     " values");
    if (values.empty()) FailValidation("CombinationWeights: empty weight vector");
    bool any = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i]) || values[i] < 0.0)
        FailValidation("CombinationWeights: weight '", names[i], "' = ", values[i],
                       " must be finite and >= 0");
      for (std::size_t j = 0; j < i; ++j)
        if (names[j] == names[i]) FailValidation("CombinationWeights: duplicate name '", names[i], "'");
      any = any || values[i] > 0.0;
    }
    if (!any) FailValidation("CombinationWeights: at least one weight must be > 0");
  }

  CombinationWeights Normalized() const {
    Validate();
    double s = 0.0;
    for (double v : values) s += v;
    CombinationWeights w = *this;
    for (double &v : w.values) v /= s;
    return w;
  }

  /// "9:8" style rendering of the stored ratios.
  std::string RatioString() const {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) s += ":";
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", values[i]);
      s += buf;
    }
    return s;
  }
};

enum class CombineMode { kFrameJoint, kRescore };

inline const char *CombineModeName(CombineMode m) {
  return m == CombineMode::kFrameJoint ? "frame-joint" : "rescore";
}

inline CombineMode ParseCombineMode(const std::string &s) {
  if (s == "frame-joint") return CombineMode::kFrameJoint;
  if (s == "rescore") return CombineMode::kRescore;
  FailValidation("unknown combine mode '", s, "' (expected frame-joint|rescore)");
}

struct WeightPreset {
  std::string name;
  CombineMode mode;
  CombinationWeights weights;
  std::string description;
};

/// Built-in weight settings for the reference dysarthric (UASpeech) and
/// elderly (Pitt) systems.
inline const std::vector<WeightPreset> &WeightPresets() {
  static const std::vector<WeightPreset> presets = {
      {"uaspeech-2way-a", CombineMode::kFrameJoint, CombinationWeights::Positional({9, 8}),
       "UASpeech 2-way frame-level joint decoding, weights 9:8"},
      {"uaspeech-2way-b", CombineMode::kFrameJoint, CombinationWeights::Positional({7, 9}),
       "UASpeech 2-way frame-level joint decoding, weights 7:9"},
      {"uaspeech-3way", CombineMode::kFrameJoint, CombinationWeights::Positional({8, 5, 5}),
       "UASpeech 3-way frame-level joint decoding, weights 8:5:5"},
      {"pitt-3way", CombineMode::kFrameJoint, CombinationWeights::Positional({5, 2, 8}),
       "Pitt 3-way frame-level joint decoding, weights 5:2:8"},
      {"uaspeech-rescore", CombineMode::kRescore,
       CombinationWeights{{"ctc", "attention", "tdnn"}, {0.9, 0.001, 0.1}},
       "UASpeech N-best rescoring, ctc:attention:tdnn = 0.9:0.001:0.1"},
      {"pitt-rescore", CombineMode::kRescore,
       CombinationWeights{{"ctc", "attention", "tdnn"}, {1.0, 0.05, 0.0075}},
       "Pitt N-best rescoring, ctc:attention:tdnn = 1:0.05:0.0075"},
  };
  return presets;
}

inline const WeightPreset &FindWeightPreset(const std::string &name) {
  std::string known;
  for (const auto &p : WeightPresets()) {
    if (p.name == name) return p;
    known += (known.empty() ? "" : ", ") + p.name;
  }
  FailValidation("unknown weight preset '", name, "' (known: ", known, ")");
}

}  // namespace asrfuse

#endif  // ASRFUSE_COMBINE_WEIGHTS_HPP_
