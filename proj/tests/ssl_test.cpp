// tests/ssl_test.cpp

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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "asrfuse/ssl/ctc.hpp"
#include "asrfuse/ssl/losses.hpp"
#include "asrfuse/ssl/masking.hpp"
#include "asrfuse/ssl/model.hpp"
#include "asrfuse/ssl/quantizers.hpp"
#include "asrfuse/ssl/synthetic.hpp"
#include "test_util.hpp"

namespace asrfuse {
namespace {

using testing::GradCheck;
using testing::RandomMatrix;

Tensor LogSoftmaxPlain(const Tensor &x) {
  Tape tp;
  return LogSoftmaxRows(tp.Constant(x)).value();
}

// ---- masking ----------------------------------------------------------------

TEST(Masking, IndicesSortedUniqueInRange) {
  Rng rng(1);
  MaskSpec spec;
  spec.start_prob = 0.2;
  spec.span = 3;
  for (int rep = 0; rep < 50; ++rep) {
    const auto m = ComputeMask(37, spec, &rng);
    ASSERT_FALSE(m.empty());
    for (std::size_t i = 0; i < m.size(); ++i) {
      ASSERT_LT(m[i], 37u);
      if (i > 0) {
        ASSERT_LT(m[i - 1], m[i]);
      }
    }
  }
}

TEST(Masking, MinSpansForcesNonEmptyMask) {
  Rng rng(2);
  MaskSpec spec;
  spec.start_prob = 0.0;
  spec.span = 2;
  const auto m = ComputeMask(10, spec, &rng);
  EXPECT_GE(m.size(), 1u);
  EXPECT_LE(m.size(), 2u);
}

TEST(Masking, FullProbabilityMasksEverything) {
  Rng rng(3);
  MaskSpec spec;
  spec.start_prob = 1.0;
  spec.span = 1;
  EXPECT_EQ(ComputeMask(8, spec, &rng).size(), 8u);
}

TEST(Masking, InvalidSpecRejected) {
  Rng rng(4);
  MaskSpec spec;
  spec.span = 0;
  EXPECT_THROW(ComputeMask(8, spec, &rng), ValidationError);
  spec.span = 2;
  spec.start_prob = 1.5;
  EXPECT_THROW(ComputeMask(8, spec, &rng), ValidationError);
}

// ---- quantizers -------------------------------------------------------------

TEST(Gumbel, HardIsOneHotOfSoftArgmax) {
  Rng rng(5);
  Tape tp;
  Var logits = tp.Parameter(RandomMatrix(6, 4, &rng));
  GumbelSelection sel = GumbelSelect(logits, 2.0, &rng);
  for (std::size_t i = 0; i < 6; ++i) {
    double sum = 0.0;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      sum += sel.hard.value()(i, j);
      if (sel.soft.value()(i, j) > sel.soft.value()(i, arg)) arg = j;
    }
    EXPECT_EQ(sum, 1.0);
    EXPECT_EQ(sel.hard.value()(i, arg), 1.0);
  }
}

TEST(Gumbel, SoftPathGradient) {
  Rng rng(6);
  const Tensor noise = SampleGumbelNoise(3, 5, &rng);
  const Tensor w = RandomMatrix(3, 5, &rng);
  const double err = GradCheck(
      [&](Tape &tp, const std::vector<Var> &x) {
        return SumAll(Mul(GumbelSelect(x[0], 1.5, noise).soft, tp.Constant(w)));
      },
      {RandomMatrix(3, 5, &rng)});
  EXPECT_LT(err, 1e-4);
}

TEST(KMeans, SeparatesWellSeparatedClusters) {
  Rng rng(7);
  Tensor x = Tensor::Matrix(60, 2);
  for (std::size_t i = 0; i < 60; ++i) {
    const double c = static_cast<double>(i % 3) * 10.0;
    x(i, 0) = c + 0.1 * rng.Normal();
    x(i, 1) = -c + 0.1 * rng.Normal();
  }
  KMeansResult r = KMeansFit(x, 3, 10, 1);
  for (std::size_t i = 3; i < 60; ++i) EXPECT_EQ(r.assignments[i], r.assignments[i % 3]);
  for (std::size_t i = 1; i < r.inertia.size(); ++i)
    EXPECT_LE(r.inertia[i], r.inertia[i - 1] + 1e-9);
}

TEST(KMeans, RejectsTooFewFrames) {
  EXPECT_THROW(KMeansFit(Tensor::Matrix(2, 3), 4, 5, 0), ValidationError);
}

TEST(KMeans, QuantizerAssignsNearest) {
  KMeansQuantizer q({Tensor::FromRows({{0, 0}, {5, 5}})});
  const auto labels = q.Assign(Tensor::FromRows({{4, 4}, {1, -1}}));
  EXPECT_EQ(labels[0], (std::vector<std::size_t>{1, 0}));
  EXPECT_THROW(q.Assign(Tensor::Matrix(1, 3)), ValidationError);
}

// ---- CTC --------------------------------------------------------------------

TEST(Ctc, MatchesPathEnumeration) {
  Rng rng(8);
  for (std::size_t t = 1; t <= 5; ++t)
    for (std::size_t v = 2; v <= 4; ++v)
      for (std::size_t len = 0; len <= 3; ++len) {
        std::vector<std::size_t> labels;
        for (std::size_t i = 0; i < len; ++i) labels.push_back(1 + rng.Index(v - 1));
        if (CtcMinFrames(labels) > t) continue;
        const Tensor lp = LogSoftmaxPlain(RandomMatrix(t, v, &rng));
        const double expect = testing::BruteForceCtcLogLikelihood(lp, labels, 0);
        EXPECT_NEAR(CtcForwardBackward(lp, labels, 0).log_likelihood, expect, 1e-10);
      }
}

TEST(Ctc, RepeatsNeedSeparatingBlank) {
  EXPECT_EQ(CtcMinFrames({1, 1}), 3u);
  EXPECT_EQ(CtcMinFrames({1, 2}), 2u);
  Tape tp;
  EXPECT_THROW(CtcLoss(tp.Constant(Tensor::Matrix(2, 3)), {1, 1}, 0), ValidationError);
}

TEST(Ctc, GradientThroughLogSoftmax) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const std::vector<std::size_t> labels{1, 2, 2};
    const double err = GradCheck(
        [&](Tape &, const std::vector<Var> &x) { return CtcLoss(LogSoftmaxRows(x[0]), labels, 0); },
        {RandomMatrix(6, 4, &rng)});
    EXPECT_LT(err, 1e-4) << "seed " << seed;
  }
}

TEST(Ctc, RejectsBadLabels) {
  Tape tp;
  Var lp = tp.Constant(Tensor::Matrix(4, 3));
  EXPECT_THROW(CtcLoss(lp, {0}, 0), ValidationError);
  EXPECT_THROW(CtcLoss(lp, {3}, 0), ValidationError);
}

TEST(Ctc, JointScoreInterpolates) {
  EXPECT_DOUBLE_EQ(JointCtcAttentionScore(10.0, 20.0), 0.3 * 10.0 + 0.7 * 20.0);
  EXPECT_DOUBLE_EQ(JointCtcAttentionScore(10.0, 20.0, 1.0), 10.0);
  EXPECT_THROW(JointCtcAttentionScore(1.0, 2.0, 1.5), ValidationError);
  EXPECT_THROW(JointCtcAttentionScore(std::nan(""), 2.0), NumericalError);
}

// ---- losses -----------------------------------------------------------------

TEST(Contrastive, UniformCaseIsLogOfCandidateCount) {
  // Identical targets make all 10 candidates equally similar.
  const std::size_t m = 10;
  Tape tp;
  Rng rng(9);
  Var c = tp.Constant(RandomMatrix(m, 4, &rng));
  Tensor q = Tensor::Matrix(m, 4, 0.0);
  for (std::size_t i = 0; i < m; ++i) q.Row(i)[0] = 1.0;
  auto distractors = SampleDistractors(m, 9, &rng);
  const double loss = ContrastiveLoss(c, tp.Constant(q), distractors, 0.1).value().item();
  EXPECT_NEAR(loss / static_cast<double>(m), std::log(10.0), 1e-9);
}

TEST(Diversity, UniformCaseClosedForm) {
  const double alpha = 0.1;
  for (std::size_t g : {1u, 2u})
    for (std::size_t v : {2u, 8u, 320u}) {
      Tape tp;
      Var p = tp.Constant(Tensor::Matrix(5, g * v, 1.0 / static_cast<double>(v)));
      const double expect = -alpha * std::log(static_cast<double>(v)) / static_cast<double>(v);
      EXPECT_NEAR(DiversityLoss(p, g, v, alpha).value().item(), expect, 1e-9)
          << "G=" << g << " V=" << v;
    }
}

TEST(Diversity, CollapsedCodebookCostsMore) {
  Tape tp;
  Var uniform = tp.Constant(Tensor::Matrix(4, 4, 0.25));
  Var collapsed = tp.Constant(Tensor::FromRows({{0.97, 0.01, 0.01, 0.01},
                                                {0.97, 0.01, 0.01, 0.01},
                                                {0.97, 0.01, 0.01, 0.01},
                                                {0.97, 0.01, 0.01, 0.01}}));
  EXPECT_LT(DiversityLoss(uniform, 1, 4, 0.1).value().item(),
            DiversityLoss(collapsed, 1, 4, 0.1).value().item());
}

TEST(Contrastive, GradientOfCombinedObjective) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    auto distractors = SampleDistractors(6, 3, &rng);
    const double err = GradCheck(
        [&](Tape &, const std::vector<Var> &x) {
          return ContrastiveDiversityLoss(x[0], x[1], distractors, SoftmaxRows(x[2]), 2, 3, 0.5,
                                          0.1)
              .total;
        },
        {RandomMatrix(6, 4, &rng), RandomMatrix(6, 4, &rng), RandomMatrix(8, 6, &rng)});
    EXPECT_LT(err, 1e-4) << "seed " << seed;
  }
}

TEST(Contrastive, RejectsMisalignedInputs) {
  Tape tp;
  Rng rng(1);
  Var c = tp.Constant(RandomMatrix(3, 4, &rng));
  Var q = tp.Constant(RandomMatrix(2, 4, &rng));
  EXPECT_THROW(ContrastiveLoss(c, q, {{1}, {0}, {0}}, 0.1), ValidationError);
  EXPECT_THROW(SampleDistractors(1, 2, &rng), ValidationError);
}

TEST(MaskedPrediction, UniformCaseIsLogV) {
  Tape tp;
  Rng rng(10);
  const std::size_t m = 5, v = 7;
  Var proj = tp.Constant(RandomMatrix(m, 3, &rng));
  Var code = tp.Constant(Tensor::Matrix(v, 3, 1.0));
  std::vector<std::vector<std::size_t>> labels{{0, 1, 2, 3, 4}};
  const double loss = MaskedPredictionLoss({proj}, {code}, labels, 0.1).value().item();
  EXPECT_NEAR(loss, static_cast<double>(m) * std::log(static_cast<double>(v)), 1e-9);
}

TEST(MaskedPrediction, Gradient) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    std::vector<std::vector<std::size_t>> labels(2);
    for (auto &l : labels)
      for (int t = 0; t < 5; ++t) l.push_back(rng.Index(4));
    const double err = GradCheck(
        [&](Tape &, const std::vector<Var> &x) {
          return MaskedPredictionLoss({x[0], x[1]}, {x[2], x[3]}, labels, 0.3);
        },
        {RandomMatrix(5, 3, &rng), RandomMatrix(5, 3, &rng), RandomMatrix(4, 3, &rng),
         RandomMatrix(4, 3, &rng)});
    EXPECT_LT(err, 1e-4) << "seed " << seed;
  }
}

TEST(Data2vec, TargetsAverageNormalizedTopBlocks) {
  Rng rng(11);
  std::vector<Tensor> blocks{RandomMatrix(4, 6, &rng), RandomMatrix(4, 6, &rng),
                             RandomMatrix(4, 6, &rng)};
  const Tensor y = TeacherTargets(blocks, 2, {1, 3});
  ASSERT_EQ(y.rows(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    double mean = 0.0;
    for (double v : y.Row(i)) mean += v;
    EXPECT_NEAR(mean, 0.0, 1e-12);  // average of zero-mean rows
  }
  EXPECT_THROW(TeacherTargets(blocks, 4, {0}), ValidationError);
  // K = 1 picks the normalized last block.
  const Tensor last = TeacherTargets(blocks, 1, {0});
  const Tensor one = TeacherTargets({blocks[2]}, 1, {0});
  EXPECT_EQ(last, one);
}

TEST(Data2vec, SmoothL1ValuesAndGradient) {
  Tape tp;
  Var s = tp.Constant(Tensor::FromRows({{0.1, 1.0}}));
  const double v = TeacherStudentLoss(s, Tensor::Matrix(1, 2), 0.25).value().item();
  EXPECT_NEAR(v, 0.5 * 0.01 / 0.25 + (1.0 - 0.125), 1e-12);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    std::vector<Tensor> blocks{RandomMatrix(6, 4, &rng), RandomMatrix(6, 4, &rng)};
    const double err = GradCheck(
        [&](Tape &, const std::vector<Var> &x) {
          return Data2vecLoss(x[0], blocks, 2, {0, 2, 3}, 0.25);
        },
        {RandomMatrix(6, 4, &rng)});
    EXPECT_LT(err, 1e-4) << "seed " << seed;
  }
}

TEST(Ema, BoundaryDecays) {
  ParameterSet student, teacher;
  student.Add("w", Tensor::FromRows({{1.0, 2.0}}));
  teacher.Add("w", Tensor::FromRows({{5.0, 6.0}}));
  ParameterSet t1 = teacher;
  EmaUpdate(&t1, student, 3, 1.0);
  EXPECT_EQ(t1.value(0), student.value(0));
  ParameterSet t0 = teacher;
  EmaUpdate(&t0, student, 3, 0.0);
  EXPECT_EQ(t0.value(0), teacher.value(0));
  ParameterSet tz = teacher;
  EmaUpdate(&tz, student, 0, 0.3);
  EXPECT_EQ(tz.value(0), student.value(0));
  ParameterSet th = teacher;
  EmaUpdate(&th, student, 1, 0.25);
  EXPECT_DOUBLE_EQ(th.value(0)(0, 0), 0.25 * 1.0 + 0.75 * 5.0);
  EXPECT_THROW(EmaUpdate(&th, student, 1, 1.5), ValidationError);
}

// ---- models -----------------------------------------------------------------

SslModelConfig TinyConfig(SslObjective objective) {
  SslModelConfig c;
  c.objective = objective;
  c.network.input_dim = 5;
  c.network.model_dim = 8;
  c.network.num_heads = 2;
  c.network.ff_dim = 12;
  c.network.num_blocks = 2;
  c.mask.start_prob = 0.3;
  c.mask.span = 2;
  c.num_codebooks = 2;
  c.codebook_size = 3;
  c.num_distractors = 3;
  c.kmeans_sizes = {3};
  c.projection_dim = 4;
  c.top_k = 2;
  c.vocab_size = 3;
  return c;
}

std::vector<SslExample> TinyData(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SslExample> out;
  for (int i = 0; i < 2; ++i) out.push_back({RandomMatrix(7, 5, &rng), {1, 2, 3}});
  return out;
}

TEST(SslModel, FullObjectiveGradients) {
  for (SslObjective obj : {SslObjective::kHubert, SslObjective::kData2vec, SslObjective::kCtc}) {
    SslModel model(TinyConfig(obj), 3);
    const auto data = TinyData(4);
    model.FitPseudoLabels(data[0].features, 1);
    const double err = testing::GradCheckParams(&model.params(), [&](Graph &g) {
      Rng rng(77);
      return model.BatchLoss(g, data, &rng).total;
    });
    EXPECT_LT(err, 1e-4) << SslObjectiveName(obj);
  }
}

TEST(SslModel, TrainingRunsAndIsDeterministic) {
  for (SslObjective obj : {SslObjective::kWav2vec2, SslObjective::kHubert,
                           SslObjective::kData2vec, SslObjective::kCtc}) {
    auto run = [&] {
      SslModel model(TinyConfig(obj), 5);
      const auto data = TinyData(6);
      model.FitPseudoLabels(data[0].features, 2);
      SslTrainOptions o;
      o.epochs = 2;
      o.seed = 9;
      SslTrainer trainer(&model, o, data.size());
      std::vector<double> losses;
      trainer.Train(data, 0, [&](const EpochLog &l) { losses.push_back(l.loss); });
      EXPECT_EQ(losses.size(), 2u);
      for (double l : losses) EXPECT_TRUE(std::isfinite(l));
      return model.params();
    };
    EXPECT_TRUE(run() == run()) << SslObjectiveName(obj);
  }
}

TEST(SslModel, ResumeMatchesUninterruptedRun) {
  const auto data = TinyData(12);
  SslTrainOptions o;
  o.epochs = 4;
  o.seed = 3;
  SslModel full(TinyConfig(SslObjective::kData2vec), 1);
  SslTrainer tf(&full, o, data.size());
  tf.Train(data, 0, [](const EpochLog &) {});

  SslModel part(TinyConfig(SslObjective::kData2vec), 1);
  SslTrainOptions o2 = o;
  o2.epochs = 2;
  o2.optimizer.total_steps = 4 * SslTrainer::StepsPerEpoch(data.size(), o.batch_size);
  SslTrainer tp(&part, o2, data.size());
  tp.Train(data, 0, [](const EpochLog &) {});
  SslTrainOptions o3 = o;
  SslTrainer tr(&part, o3, data.size());
  tr.optimizer().Restore(tp.optimizer().step(), tp.optimizer().first_moments(),
                         tp.optimizer().second_moments());
  tr.Train(data, 2, [](const EpochLog &) {});
  EXPECT_TRUE(full.params() == part.params());
  EXPECT_TRUE(full.teacher() == part.teacher());
}

TEST(SslModel, InvalidConfigRejected) {
  SslModelConfig c = TinyConfig(SslObjective::kWav2vec2);
  c.num_codebooks = 3;  // does not divide model dim 8
  EXPECT_THROW(SslModel(c, 0), ValidationError);
  c = TinyConfig(SslObjective::kData2vec);
  c.top_k = 5;
  EXPECT_THROW(SslModel(c, 0), ValidationError);
  EXPECT_THROW(ParseSslObjective("bert"), ValidationError);
}

TEST(SslModel, CtcLogProbsNormalized) {
  SslModel model(TinyConfig(SslObjective::kCtc), 2);
  Rng rng(1);
  const Tensor lp = model.CtcLogProbs(RandomMatrix(6, 5, &rng));
  ASSERT_EQ(lp.cols(), 4u);
  for (std::size_t t = 0; t < 6; ++t) {
    double s = 0.0;
    for (double v : lp.Row(t)) s += std::exp(v);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(SyntheticTokens, ShapesAndLabels) {
  TokenCorpusOptions o;
  o.num_utterances = 3;
  o.num_frames = 30;
  const auto corpus = GenerateTokenCorpus(5, o);
  ASSERT_EQ(corpus.size(), 3u);
  for (const auto &u : corpus) {
    EXPECT_EQ(u.features.frames.rows(), 30u);
    EXPECT_EQ(u.features.frames.cols(), 40u);
    EXPECT_EQ(u.frame_tokens.size(), 30u);
    for (std::size_t i = 1; i < u.labels.size(); ++i) EXPECT_NE(u.labels[i], u.labels[i - 1]);
    for (std::size_t tok : u.labels) {
      EXPECT_GE(tok, 1u);
      EXPECT_LE(tok, o.num_tokens);
    }
  }
  const auto again = GenerateTokenCorpus(5, o);
  EXPECT_EQ(corpus[2].features.frames, again[2].features.frames);
  EXPECT_EQ(TokenInventory(2), (std::vector<std::string>{"<blk>", "t1", "t2"}));
}

}  // namespace
}  // namespace asrfuse
