// asrfuse/ssl/ctc.hpp

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

#ifndef ASRFUSE_SSL_CTC_HPP_
#define ASRFUSE_SSL_CTC_HPP_

#include <cmath>
#include <limits>
#include <vector>

#include "asrfuse/numcore/ops.hpp"

namespace asrfuse {

namespace internal {

constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline double LogAdd(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

}  // namespace internal

/// Minimum number of frames able to emit `labels`: one per label plus one
/// blank between each pair of equal neighbours.
inline std::size_t CtcMinFrames(const std::vector<std::size_t> &labels) {
  std::size_t n = labels.size();
  for (std::size_t i = 1; i < labels.size(); ++i)
    if (labels[i] == labels[i - 1]) ++n;
  return n;
}

struct CtcLattice {
  std::vector<std::size_t> extended;  // blank, l1, blank, l2, ..., blank
  Tensor log_alpha;                   // T x S
  Tensor log_beta;                    // T x S
  double log_likelihood = 0.0;
};

/// Log-space forward-backward over the blank-extended label sequence.  Both
/// alpha and beta include the emission of frame t.
inline CtcLattice CtcForwardBackward(const Tensor &log_probs,
                                     const std::vector<std::size_t> &labels,
                                     std::size_t blank) {
  using internal::kLogZero;
  using internal::LogAdd;
  const std::size_t t_max = log_probs.rows(), v = log_probs.cols();
  if (blank >= v) FailValidation("CtcLoss: blank index ", blank, " out of range for ", v);
  for (std::size_t l : labels) {
    if (l >= v) FailValidation("CtcLoss: label ", l, " out of range for ", v, " outputs");
    if (l == blank) FailValidation("CtcLoss: label sequence contains the blank index");
  }
  if (t_max == 0) FailValidation("CtcLoss: no frames");
  if (CtcMinFrames(labels) > t_max)
    FailValidation("CtcLoss: label of length ", labels.size(), " needs at least ",
                   CtcMinFrames(labels), " frames, got ", t_max);

  CtcLattice lat;
  lat.extended.push_back(blank);
  for (std::size_t l : labels) {
    lat.extended.push_back(l);
    lat.extended.push_back(blank);
  }
  const std::size_t s_max = lat.extended.size();
  const auto &ext = lat.extended;
  auto can_skip = [&](std::size_t s) {
    return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2];
  };

  lat.log_alpha = Tensor::Matrix(t_max, s_max, kLogZero);
  Tensor &a = lat.log_alpha;
  a(0, 0) = log_probs(0, ext[0]);
  if (s_max > 1) a(0, 1) = log_probs(0, ext[1]);
  for (std::size_t t = 1; t < t_max; ++t) {
    for (std::size_t s = 0; s < s_max; ++s) {
      double acc = a(t - 1, s);
      if (s >= 1) acc = LogAdd(acc, a(t - 1, s - 1));
      if (can_skip(s)) acc = LogAdd(acc, a(t - 1, s - 2));
      a(t, s) = acc == kLogZero ? kLogZero : acc + log_probs(t, ext[s]);
    }
  }

  lat.log_beta = Tensor::Matrix(t_max, s_max, kLogZero);
  Tensor &b = lat.log_beta;
  b(t_max - 1, s_max - 1) = log_probs(t_max - 1, ext[s_max - 1]);
  if (s_max > 1) b(t_max - 1, s_max - 2) = log_probs(t_max - 1, ext[s_max - 2]);
  for (std::size_t t = t_max - 1; t-- > 0;) {
    for (std::size_t s = 0; s < s_max; ++s) {
      double acc = b(t + 1, s);
      if (s + 1 < s_max) acc = LogAdd(acc, b(t + 1, s + 1));
      if (s + 2 < s_max && can_skip(s + 2)) acc = LogAdd(acc, b(t + 1, s + 2));
      b(t, s) = acc == kLogZero ? kLogZero : acc + log_probs(t, ext[s]);
    }
  }

  double ll = a(t_max - 1, s_max - 1);
  if (s_max > 1) ll = LogAdd(ll, a(t_max - 1, s_max - 2));
  lat.log_likelihood = ll;
  return lat;
}

/// Negative log probability of `labels` under per-frame log distributions
/// `log_probs` (T x (V+1), including the blank column).
inline Var CtcLoss(Var log_probs, const std::vector<std::size_t> &labels, std::size_t blank) {
  const Tensor &lp = log_probs.value();
  if (lp.rank() != 2) FailValidation("CtcLoss: expected a T x V matrix");
  CtcLattice lat = CtcForwardBackward(lp, labels, blank);
  if (!std::isfinite(lat.log_likelihood))
    FailNumerical("CtcLoss: label sequence has zero probability");
  const double loss = -lat.log_likelihood;
  const std::size_t xi = log_probs.id;
  return log_probs.tape->Record(
      "CtcLoss", Tensor::Scalar(loss), {log_probs},
      [xi, lat = std::move(lat)](Tape &tp, const Tensor &g) {
        Tensor *gx = tp.GradOf(xi);
        if (!gx) return;
        const Tensor &lp = tp.Value(xi);
        for (std::size_t t = 0; t < lp.rows(); ++t) {
          for (std::size_t s = 0; s < lat.extended.size(); ++s) {
            const double la = lat.log_alpha(t, s), lb = lat.log_beta(t, s);
            if (la == internal::kLogZero || lb == internal::kLogZero) continue;
            const std::size_t k = lat.extended[s];
            (*gx)(t, k) -= g[0] * std::exp(la + lb - lp(t, k) - lat.log_likelihood);
          }
        }
      });
}

/// Interpolated CTC / attention cost, lambda * ctc + (1 - lambda) * attention.
inline double JointCtcAttentionScore(double ctc_cost, double attention_cost,
                                     double ctc_weight = 0.3) {
  if (!std::isfinite(ctc_cost) || !std::isfinite(attention_cost))
    FailNumerical("JointCtcAttentionScore: non-finite score");
  if (ctc_weight < 0.0 || ctc_weight > 1.0)
    FailValidation("JointCtcAttentionScore: weight must be in [0, 1], got ", ctc_weight);
  if (ctc_weight == 1.0) return ctc_cost;
  if (ctc_weight == 0.0) return attention_cost;
  return ctc_weight * ctc_cost + (1.0 - ctc_weight) * attention_cost;
}

}  // namespace asrfuse

#endif  // ASRFUSE_SSL_CTC_HPP_
