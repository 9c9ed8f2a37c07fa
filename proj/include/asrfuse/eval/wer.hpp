// asrfuse/eval/wer.hpp

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

#ifndef ASRFUSE_EVAL_WER_HPP_
#define ASRFUSE_EVAL_WER_HPP_

#include <map>
#include <set>
#include <string>
#include <vector>

#include "asrfuse/eval/alignment.hpp"

namespace asrfuse {

struct TranscriptRecord {
  std::string utt_id;
  std::vector<std::string> ref;
  std::vector<std::string> hyp;
  std::map<std::string, std::string> metadata;
};

struct ScoredTranscriptSet {
  std::vector<TranscriptRecord> records;

  void Validate() const {
    std::set<std::string> seen;
    for (const auto &r : records) {
      if (!seen.insert(r.utt_id).second)
        FailValidation("ScoredTranscriptSet: duplicate utt_id '", r.utt_id, "'");
      if (r.ref.empty()) FailValidation("ScoredTranscriptSet: empty reference for '", r.utt_id, "'");
    }
  }
};

/// Counts for one group; `path` holds the metadata values of the grouping
/// keys, one per nesting level.
struct GroupRate {
  std::vector<std::string> path;
  ErrorCounts counts;
};

struct ErrorRateReport {
  ErrorCounts overall;
  std::vector<std::string> group_keys;
  std::vector<GroupRate> groups;  // every prefix of every path, sorted by path
  std::vector<ErrorCounts> per_utterance;
};

/// Pooled error rate, plus nested breakdowns by `group_keys` (first key
/// outermost).
inline ErrorRateReport ErrorRate(const ScoredTranscriptSet &set,
                                 const std::vector<std::string> &group_keys = {}) {
  set.Validate();
  ErrorRateReport rep;
  rep.group_keys = group_keys;
  std::map<std::vector<std::string>, ErrorCounts> groups;
  for (const auto &r : set.records) {
    const ErrorCounts c = AlignAndCount(r.ref, r.hyp).counts;
    rep.per_utterance.push_back(c);
    rep.overall += c;
    std::vector<std::string> path;
    for (const auto &key : group_keys) {
      auto it = r.metadata.find(key);
      if (it == r.metadata.end())
        FailValidation("ErrorRate: record '", r.utt_id, "' has no metadata key '", key, "'");
      path.push_back(it->second);
      groups[path] += c;
    }
  }
  for (auto &[path, c] : groups) rep.groups.push_back({path, c});
  return rep;
}

}  // namespace asrfuse

#endif  // ASRFUSE_EVAL_WER_HPP_
