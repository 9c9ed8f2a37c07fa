// asrfuse/combine/nbest.hpp

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

#ifndef ASRFUSE_COMBINE_NBEST_HPP_
#define ASRFUSE_COMBINE_NBEST_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "asrfuse/combine/weights.hpp"

namespace asrfuse {

constexpr std::size_t kDefaultNBest = 30;

struct Hypothesis {
  std::string text;
  std::vector<std::string> tokens;
  std::map<std::string, double> scores;  // costs, lower is better
};

struct NBestList {
  std::string utt_id;
  std::vector<Hypothesis> hyps;  // original rank order

  void Validate() const {
    if (hyps.empty()) FailValidation("NBestList '", utt_id, "': no hypotheses");
    for (std::size_t i = 1; i < hyps.size(); ++i) {
      bool same = hyps[i].scores.size() == hyps[0].scores.size();
      for (auto a = hyps[i].scores.begin(), b = hyps[0].scores.begin(); same && a != hyps[i].scores.end();
           ++a, ++b)
        same = a->first == b->first;
      if (!same)
        FailValidation("NBestList '", utt_id, "': hypothesis ", i,
                       " has different score names than hypothesis 0");
    }
  }
};

struct RescoreResult {
  std::size_t best = 0;               // original index of the winner
  std::vector<std::size_t> order;     // original indices, ascending combined cost
  std::vector<double> combined;       // per original index
  NBestList reranked;
};

/// combined_i = sum_name w_name s_i^name; argmin with ties resolved by the
/// original rank (stable ascending sort).
inline RescoreResult RescoreNBest(const NBestList &nbest, const CombinationWeights &w) {
  w.Validate();
  if (nbest.hyps.empty()) FailValidation("RescoreNBest: '", nbest.utt_id, "' has no hypotheses");
  RescoreResult r;
  r.combined.resize(nbest.hyps.size());
  for (std::size_t i = 0; i < nbest.hyps.size(); ++i) {
    double c = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      auto it = nbest.hyps[i].scores.find(w.names[k]);
      if (it == nbest.hyps[i].scores.end())
        FailValidation("RescoreNBest: '", nbest.utt_id, "' hypothesis ", i, " has no score '",
                       w.names[k], "'");
      if (!std::isfinite(it->second))
        FailValidation("RescoreNBest: '", nbest.utt_id, "' hypothesis ", i, " score '",
                       w.names[k], "' is not finite");
      c += w.values[k] * it->second;
    }
    r.combined[i] = c;
  }
  r.order.resize(nbest.hyps.size());
  std::iota(r.order.begin(), r.order.end(), 0);
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](std::size_t a, std::size_t b) { return r.combined[a] < r.combined[b]; });
  r.best = r.order.front();
  r.reranked.utt_id = nbest.utt_id;
  for (std::size_t i : r.order) r.reranked.hyps.push_back(nbest.hyps[i]);
  return r;
}

/// Keeps the top `n` hypotheses by original rank.
inline NBestList TruncateNBest(const NBestList &nbest, std::size_t n = kDefaultNBest) {
  if (n == 0) FailValidation("TruncateNBest: N must be >= 1");
  NBestList out;
  out.utt_id = nbest.utt_id;
  out.hyps.assign(nbest.hyps.begin(),
                  nbest.hyps.begin() + static_cast<std::ptrdiff_t>(std::min(n, nbest.hyps.size())));
  return out;
}

}  // namespace asrfuse

#endif  // ASRFUSE_COMBINE_NBEST_HPP_
