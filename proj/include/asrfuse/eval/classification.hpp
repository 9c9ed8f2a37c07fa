// asrfuse/eval/classification.hpp

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

#ifndef ASRFUSE_EVAL_CLASSIFICATION_HPP_
#define ASRFUSE_EVAL_CLASSIFICATION_HPP_

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "asrfuse/numcore/error.hpp"

namespace asrfuse {

struct ConfusionCounts {
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
};

/// Percentages; a metric without support (no positives or no negatives) is
/// absent rather than zero.
struct ClassificationMetrics {
  ConfusionCounts counts;
  std::optional<double> accuracy;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
};

inline ClassificationMetrics MetricsFromCounts(const ConfusionCounts &c) {
  ClassificationMetrics m;
  m.counts = c;
  const std::size_t p = c.tp + c.fn, n = c.tn + c.fp;
  if (p + n > 0) m.accuracy = 100.0 * static_cast<double>(c.tp + c.tn) / static_cast<double>(p + n);
  if (p > 0) m.sensitivity = 100.0 * static_cast<double>(c.tp) / static_cast<double>(p);
  if (n > 0) m.specificity = 100.0 * static_cast<double>(c.tn) / static_cast<double>(n);
  return m;
}

inline ClassificationMetrics ComputeClassificationMetrics(
    const std::vector<std::string> &predictions, const std::vector<std::string> &labels,
    const std::string &positive) {
  if (predictions.size() != labels.size())
    FailValidation("ClassificationMetrics: ", predictions.size(), " predictions for ",
                   labels.size(), " labels");
  std::map<std::string, int> classes;
  for (const auto &l : labels) classes[l];
  for (const auto &p : predictions) classes[p];
  classes.erase(positive);
  if (classes.size() > 1)
    FailValidation("ClassificationMetrics: labels are not binary around '", positive, "'");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool truth = labels[i] == positive, pred = predictions[i] == positive;
    if (truth && pred) ++c.tp;
    else if (truth) ++c.fn;
    else if (pred) ++c.fp;
    else ++c.tn;
  }
  return MetricsFromCounts(c);
}

/// Per-subject modal label across voters; an even split between the
/// positive class and another label goes to the positive class, other ties
/// to the lexicographically smallest label.
inline std::vector<std::string> MajorityVote(
    const std::vector<std::vector<std::string>> &votes, const std::string &positive) {
  if (votes.empty()) FailValidation("MajorityVote: no voters");
  const std::size_t n = votes[0].size();
  for (std::size_t k = 1; k < votes.size(); ++k)
    if (votes[k].size() != n)
      FailValidation("MajorityVote: voter ", k, " labels ", votes[k].size(), " subjects, voter 0 ",
                     n);
  std::vector<std::string> out;
  for (std::size_t s = 0; s < n; ++s) {
    std::map<std::string, std::size_t> tally;
    for (const auto &v : votes) ++tally[v[s]];
    std::size_t top = 0;
    for (const auto &[label, c] : tally) top = std::max(top, c);
    std::string winner;
    auto pos = tally.find(positive);
    if (pos != tally.end() && pos->second == top) {
      winner = positive;
    } else {
      for (const auto &[label, c] : tally)
        if (c == top) {
          winner = label;
          break;
        }
    }
    out.push_back(winner);
  }
  return out;
}

/// Subject-keyed variant: every voter must label exactly the same subjects.
inline std::map<std::string, std::string> MajorityVote(
    const std::vector<std::map<std::string, std::string>> &votes, const std::string &positive) {
  if (votes.empty()) FailValidation("MajorityVote: no voters");
  std::vector<std::vector<std::string>> flat(votes.size());
  std::vector<std::string> subjects;
  for (const auto &[subject, label] : votes[0]) subjects.push_back(subject);
  for (std::size_t k = 0; k < votes.size(); ++k) {
    if (votes[k].size() != subjects.size())
      FailValidation("MajorityVote: voter ", k, " has a different subject set");
    for (const auto &s : subjects) {
      auto it = votes[k].find(s);
      if (it == votes[k].end())
        FailValidation("MajorityVote: voter ", k, " has no label for subject '", s, "'");
      flat[k].push_back(it->second);
    }
  }
  const auto fused = MajorityVote(flat, positive);
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < subjects.size(); ++i) out[subjects[i]] = fused[i];
  return out;
}

}  // namespace asrfuse

#endif  // ASRFUSE_EVAL_CLASSIFICATION_HPP_
