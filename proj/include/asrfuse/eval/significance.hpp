// asrfuse/eval/significance.hpp

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

#ifndef ASRFUSE_EVAL_SIGNIFICANCE_HPP_
#define ASRFUSE_EVAL_SIGNIFICANCE_HPP_

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "asrfuse/eval/wer.hpp"

namespace asrfuse {

constexpr double kDefaultSignificanceLevel = 0.05;

struct SignificanceReport {
  std::vector<double> differences;  // errors(A) - errors(B) per segment
  double mean = 0.0;
  std::optional<double> stddev;     // sample (n - 1) standard deviation
  std::optional<double> z;
  std::optional<double> p_value;    // two-sided, standard normal
  double alpha = kDefaultSignificanceLevel;
  bool significant = false;
  bool degenerate = false;
  std::string note;
};

/// Matched-pairs test on per-segment error differences; segments are
/// utterances.  Degenerate cases (n < 2, zero variance) carry no Z.
inline SignificanceReport MatchedPairsTest(std::vector<double> differences,
                                           double alpha = kDefaultSignificanceLevel) {
  if (!(alpha > 0.0 && alpha < 1.0)) FailValidation("MatchedPairsTest: alpha must be in (0, 1)");
  SignificanceReport r;
  r.alpha = alpha;
  r.differences = std::move(differences);
  const std::size_t n = r.differences.size();
  double sum = 0.0;
  for (double d : r.differences) sum += d;
  r.mean = n ? sum / static_cast<double>(n) : 0.0;
  if (n < 2) {
    r.degenerate = true;
    r.note = "fewer than two segments";
    return r;
  }
  double ss = 0.0;
  for (double d : r.differences) ss += (d - r.mean) * (d - r.mean);
  r.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  if (*r.stddev == 0.0) {
    r.degenerate = true;
    if (r.mean == 0.0) {
      r.p_value = 1.0;
      r.note = "all segment differences are zero";
    } else {
      r.note = "zero variance with non-zero mean difference";
    }
    return r;
  }
  r.z = r.mean / (*r.stddev / std::sqrt(static_cast<double>(n)));
  r.p_value = std::erfc(std::abs(*r.z) / std::sqrt(2.0));
  r.significant = *r.p_value < alpha;
  return r;
}

/// Both sets must cover the same utterances with identical references.
inline SignificanceReport Mapsswe(const ScoredTranscriptSet &a, const ScoredTranscriptSet &b,
                                  double alpha = kDefaultSignificanceLevel) {
  a.Validate();
  b.Validate();
  std::map<std::string, const TranscriptRecord *> by_id;
  for (const auto &r : b.records) by_id[r.utt_id] = &r;
  if (a.records.size() != b.records.size())
    FailValidation("Mapsswe: systems cover ", a.records.size(), " and ", b.records.size(),
                   " utterances");
  std::vector<double> d;
  for (const auto &ra : a.records) {
    auto it = by_id.find(ra.utt_id);
    if (it == by_id.end()) FailValidation("Mapsswe: utterance '", ra.utt_id, "' missing from B");
    if (it->second->ref != ra.ref)
      FailValidation("Mapsswe: references differ for utterance '", ra.utt_id, "'");
    const double ea = static_cast<double>(AlignAndCount(ra.ref, ra.hyp).counts.errors());
    const double eb =
        static_cast<double>(AlignAndCount(it->second->ref, it->second->hyp).counts.errors());
    d.push_back(ea - eb);
  }
  return MatchedPairsTest(std::move(d), alpha);
}

}  // namespace asrfuse

#endif  // ASRFUSE_EVAL_SIGNIFICANCE_HPP_
