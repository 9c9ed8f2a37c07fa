// asrfuse/ssl/losses.hpp

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

// Self-supervised pre-training criteria: contrastive + codebook diversity,
// masked pseudo-label prediction, and teacher-student smooth-L1 regression
// with an exponential-moving-average teacher.

#ifndef ASRFUSE_SSL_LOSSES_HPP_
#define ASRFUSE_SSL_LOSSES_HPP_

#include <vector>

#include "asrfuse/numcore/nn.hpp"

namespace asrfuse {

/// For every one of `num_frames` masked frames, `count` distinct indices of
/// other masked frames (sampled with replacement only when fewer than
/// `count` others exist).
inline std::vector<std::vector<std::size_t>> SampleDistractors(std::size_t num_frames,
                                                               std::size_t count, Rng *rng) {
  if (count == 0) FailValidation("SampleDistractors: need at least one distractor");
  if (num_frames < 2)
    FailValidation("SampleDistractors: need at least two masked frames, got ", num_frames);
  std::vector<std::vector<std::size_t>> out(num_frames);
  for (std::size_t i = 0; i < num_frames; ++i) {
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < num_frames; ++j)
      if (j != i) others.push_back(j);
    if (others.size() >= count) {
      // Partial Fisher-Yates.
      for (std::size_t k = 0; k < count; ++k) {
        const std::size_t r = k + rng->Index(others.size() - k);
        std::swap(others[k], others[r]);
      }
      out[i].assign(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(count));
    } else {
      for (std::size_t k = 0; k < count; ++k) out[i].push_back(others[rng->Index(others.size())]);
    }
  }
  return out;
}

/// Contrastive term: for every row t, -log softmax over candidates
/// {q_t} U {q_j : j in distractors[t]} of cos(c_t, q)/kappa, summed over rows.
inline Var ContrastiveLoss(Var context, Var targets,
                           const std::vector<std::vector<std::size_t>> &distractors,
                           double kappa) {
  if (!(kappa > 0.0)) FailValidation("ContrastiveLoss: kappa must be positive, got ", kappa);
  if (!context.value().SameShape(targets.value()))
    FailValidation("ContrastiveLoss: context ", context.value().ShapeString(),
                   " and targets ", targets.value().ShapeString(), " are not aligned");
  const std::size_t m = context.rows();
  if (m == 0) FailValidation("ContrastiveLoss: no masked frames");
  if (distractors.size() != m)
    FailValidation("ContrastiveLoss: distractor lists for ", distractors.size(), " of ", m,
                   " frames");
  std::vector<std::vector<std::size_t>> candidates(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (distractors[i].empty())
      FailValidation("ContrastiveLoss: frame ", i, " has no distractors");
    if (distractors[i].size() != distractors[0].size())
      FailValidation("ContrastiveLoss: frames need equal distractor counts");
    candidates[i].push_back(i);
    candidates[i].insert(candidates[i].end(), distractors[i].begin(), distractors[i].end());
  }
  Var sims = MatMul(L2NormalizeRows(context), Transpose(L2NormalizeRows(targets)));
  Var logits = Scale(PickColumns(sims, candidates), 1.0 / kappa);
  // log-sum-exp over candidates minus the positive's logit.
  return Sub(SumAll(LogSumExpRows(logits)), SumAll(SliceCols(logits, 0, 1)));
}

/// Diversity term alpha/(G V) * sum_{g,v} pbar log pbar, where pbar is the
/// batch average of per-frame codebook probabilities.  `probs` is N x (G V),
/// codebook g occupying columns [gV, (g+1)V).
inline Var DiversityLoss(Var probs, std::size_t num_codebooks, std::size_t codebook_size,
                         double alpha) {
  if (probs.cols() != num_codebooks * codebook_size)
    FailValidation("DiversityLoss: ", probs.cols(), " columns for G=", num_codebooks,
                   ", V=", codebook_size);
  Var avg = MeanRows(probs);
  return Scale(SumAll(Mul(avg, Log(avg))),
               alpha / static_cast<double>(num_codebooks * codebook_size));
}

struct ContrastiveDiversityTerms {
  Var total;
  Var contrastive;
  Var diversity;
};

inline ContrastiveDiversityTerms ContrastiveDiversityLoss(
    Var context, Var targets, const std::vector<std::vector<std::size_t>> &distractors,
    Var codebook_probs, std::size_t num_codebooks, std::size_t codebook_size, double kappa,
    double alpha) {
  Var lc = ContrastiveLoss(context, targets, distractors, kappa);
  Var ld = DiversityLoss(codebook_probs, num_codebooks, codebook_size, alpha);
  return {Add(lc, ld), lc, ld};
}

/// Negated masked-prediction log-likelihood.  For codebook g, the predictive
/// distribution of row t is softmax_v(cos(projected[g]_t, codewords[g]_v)/tau)
/// and labels[g][t] is its target.  Summed over rows and codebooks.
inline Var MaskedPredictionLoss(const std::vector<Var> &projected,
                                const std::vector<Var> &codewords,
                                const std::vector<std::vector<std::size_t>> &labels,
                                double tau) {
  if (!(tau > 0.0)) FailValidation("MaskedPredictionLoss: tau must be positive, got ", tau);
  if (projected.empty() || projected.size() != codewords.size() ||
      projected.size() != labels.size())
    FailValidation("MaskedPredictionLoss: need matching per-codebook inputs");
  const std::size_t m = projected[0].rows();
  if (m == 0) FailValidation("MaskedPredictionLoss: masked set is empty");
  std::vector<Var> terms;
  for (std::size_t g = 0; g < projected.size(); ++g) {
    if (projected[g].rows() != m || labels[g].size() != m)
      FailValidation("MaskedPredictionLoss: codebook ", g, " is not aligned with the mask");
    Var cos = MatMul(L2NormalizeRows(projected[g]), Transpose(L2NormalizeRows(codewords[g])));
    Var logp = LogSoftmaxRows(Scale(cos, 1.0 / tau));
    std::vector<std::vector<std::size_t>> pick(m);
    for (std::size_t t = 0; t < m; ++t) pick[t] = {labels[g][t]};
    terms.push_back(Neg(SumAll(PickColumns(logp, pick))));
  }
  Var total = terms[0];
  for (std::size_t g = 1; g < terms.size(); ++g) total = Add(total, terms[g]);
  return total;
}

/// Regression targets: mean of the per-frame normalized outputs of the top
/// `top_k` teacher blocks, restricted to `rows`.  Computed without a tape,
/// so the teacher receives no gradient.
inline Tensor TeacherTargets(const std::vector<Tensor> &block_outputs, std::size_t top_k,
                             const std::vector<std::size_t> &rows, double eps = 1e-5) {
  const std::size_t l = block_outputs.size();
  if (top_k == 0 || top_k > l)
    FailValidation("TeacherTargets: K=", top_k, " must be in [1, L=", l, "]");
  const std::size_t d = block_outputs[0].cols();
  Tensor y = Tensor::Matrix(rows.size(), d);
  for (std::size_t b = l - top_k; b < l; ++b) {
    const Tensor &out = block_outputs[b];
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto row = out.Row(rows.at(i));
      double mean = 0.0;
      for (double v : row) mean += v;
      mean /= static_cast<double>(d);
      double var = 0.0;
      for (double v : row) var += (v - mean) * (v - mean);
      var /= static_cast<double>(d);
      const double inv = 1.0 / std::sqrt(var + eps);
      for (std::size_t j = 0; j < d; ++j) y(i, j) += (row[j] - mean) * inv;
    }
  }
  y.Scale(1.0 / static_cast<double>(top_k));
  return y;
}

/// Smooth-L1 regression of student outputs onto fixed targets, summed over
/// rows (masked frames) and dimensions.
inline Var TeacherStudentLoss(Var student, const Tensor &targets, double beta = 0.25) {
  if (!student.value().SameShape(targets))
    FailValidation("TeacherStudentLoss: student ", student.value().ShapeString(),
                   " vs targets ", targets.ShapeString());
  return SumAll(SmoothL1(Sub(student.tape->Constant(targets), student), beta));
}

/// Student outputs (T x d, all frames) regressed onto the top-K teacher
/// average at the masked frames.
inline Var Data2vecLoss(Var student, const std::vector<Tensor> &teacher_blocks,
                        std::size_t top_k, const std::vector<std::size_t> &mask,
                        double beta = 0.25) {
  if (mask.empty()) FailValidation("Data2vecLoss: masked set is empty");
  return TeacherStudentLoss(GatherRows(student, mask),
                            TeacherTargets(teacher_blocks, top_k, mask), beta);
}

/// Exponential moving average teacher update:
///   step 0: teacher := student
///   step i > 0: teacher := decay * student + (1 - decay) * teacher
/// The decay weighs the student, as in the teacher parameterization this
/// toolkit follows (the reverse of the usual convention).
inline void EmaUpdate(ParameterSet *teacher, const ParameterSet &student, std::size_t step,
                      double decay) {
  if (decay < 0.0 || decay > 1.0)
    FailValidation("EmaUpdate: decay must be in [0, 1], got ", decay);
  if (!teacher->SameLayout(student))
    FailValidation("EmaUpdate: teacher and student parameter shapes differ");
  for (std::size_t i = 0; i < student.size(); ++i) {
    auto &t = teacher->value(i).data();
    const auto &s = student.value(i).data();
    if (step == 0) {
      t = s;
      continue;
    }
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = decay * s[k] + (1.0 - decay) * t[k];
  }
}

}  // namespace asrfuse

#endif  // ASRFUSE_SSL_LOSSES_HPP_
