// asrfuse/eval/alignment.hpp

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

#ifndef ASRFUSE_EVAL_ALIGNMENT_HPP_
#define ASRFUSE_EVAL_ALIGNMENT_HPP_

#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

#include "asrfuse/numcore/error.hpp"

namespace asrfuse {

enum class EditOp { kMatch, kSubstitution, kInsertion, kDeletion };

struct AlignedPair {
  EditOp op;
  std::string ref;  // empty for insertions
  std::string hyp;  // empty for deletions
};

struct ErrorCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_length = 0;

  std::size_t errors() const { return substitutions + deletions + insertions; }

  /// 100 (S + D + I) / N.
  double Rate() const {
    if (ref_length == 0) FailValidation("ErrorCounts: rate over an empty reference");
    return 100.0 * static_cast<double>(errors()) / static_cast<double>(ref_length);
  }

  ErrorCounts &operator+=(const ErrorCounts &o) {
    substitutions += o.substitutions;
    deletions += o.deletions;
    insertions += o.insertions;
    ref_length += o.ref_length;
    return *this;
  }
  friend bool operator==(const ErrorCounts &, const ErrorCounts &) = default;
};

struct AlignmentResult {
  ErrorCounts counts;
  std::vector<AlignedPair> pairs;
};

/// Unit-cost Levenshtein alignment.  The backtrace prefers, among equal-cost
/// moves, match/substitution, then insertion, then deletion.
inline AlignmentResult AlignAndCount(const std::vector<std::string> &ref,
                                     const std::vector<std::string> &hyp) {
  if (ref.empty()) FailValidation("AlignAndCount: empty reference");
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t & { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      at(i, j) = std::min({at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1), at(i, j - 1) + 1,
                           at(i - 1, j) + 1});

  AlignmentResult r;
  r.counts.ref_length = n;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        r.pairs.push_back({same ? EditOp::kMatch : EditOp::kSubstitution, ref[i - 1], hyp[j - 1]});
        if (!same) ++r.counts.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      r.pairs.push_back({EditOp::kInsertion, "", hyp[j - 1]});
      ++r.counts.insertions;
      --j;
      continue;
    }
    r.pairs.push_back({EditOp::kDeletion, ref[i - 1], ""});
    ++r.counts.deletions;
    --i;
  }
  std::reverse(r.pairs.begin(), r.pairs.end());
  return r;
}

/// Whitespace tokenization, optionally ASCII case-folded.
inline std::vector<std::string> TokenizeWords(const std::string &text, bool case_fold = true) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += case_fold ? static_cast<char>(std::tolower(static_cast<unsigned char>(c))) : c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

/// One token per UTF-8 code point, whitespace dropped.
inline std::vector<std::string> TokenizeChars(const std::string &text, bool case_fold = true) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < text.size();) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) len = 4;
    else if (lead >= 0xE0) len = 3;
    else if (lead >= 0xC0) len = 2;
    if (i + len > text.size()) FailValidation("TokenizeChars: truncated UTF-8 sequence");
    if (len == 1 && std::isspace(lead)) {
      ++i;
      continue;
    }
    std::string tok = text.substr(i, len);
    if (len == 1 && case_fold) tok[0] = static_cast<char>(std::tolower(lead));
    out.push_back(std::move(tok));
    i += len;
  }
  return out;
}

enum class ScoreMode { kWer, kCer };

inline ScoreMode ParseScoreMode(const std::string &s) {
  if (s == "wer") return ScoreMode::kWer;
  if (s == "cer") return ScoreMode::kCer;
  FailValidation("unknown scoring mode '", s, "' (expected wer|cer)");
}

inline std::vector<std::string> Tokenize(const std::string &text, ScoreMode mode,
                                         bool case_fold = true) {
  return mode == ScoreMode::kWer ? TokenizeWords(text, case_fold) : TokenizeChars(text, case_fold);
}

}  // namespace asrfuse

#endif  // ASRFUSE_EVAL_ALIGNMENT_HPP_
