// tests/bottleneck_test.cpp

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
#include <string>
#include <vector>

#include "asrfuse/bottleneck/bottleneck.hpp"
#include "asrfuse/bottleneck/feature_sequence.hpp"
#include "asrfuse/ssl/context_network.hpp"
#include "test_util.hpp"

namespace asrfuse {
namespace {

using testing::RandomMatrix;

BottleneckConfig SmallConfig(std::size_t input_dim, std::size_t inner_dim) {
  BottleneckConfig c;
  c.input_dim = input_dim;
  c.inner_dim = inner_dim;
  c.dropout = 0.0;
  return c;
}

TEST(FeatureSequence, FuseConcatenatesFrameByFrame) {
  FeatureSequence a(Tensor::FromRows({{1, 2}, {3, 4}}), 10.0, FeatureKind::kFbk);
  FeatureSequence b(Tensor::FromRows({{5}, {6}}), 10.0, FeatureKind::kSsl);
  FeatureSequence f = FuseFeatures(a, b);
  EXPECT_EQ(f.frames, Tensor::FromRows({{1, 2, 5}, {3, 4, 6}}));
  EXPECT_EQ(f.kind, FeatureKind::kFused);
  EXPECT_EQ(f.frame_period_ms, 10.0);
}

TEST(FeatureSequence, FuseWithEmptyStreamIsIdentity) {
  FeatureSequence a(Tensor::FromRows({{1, 2}, {3, 4}}), 10.0, FeatureKind::kFbk);
  FeatureSequence empty(Tensor::Matrix(2, 0), 10.0, FeatureKind::kSsl);
  EXPECT_EQ(FuseFeatures(a, empty).frames, a.frames);
  EXPECT_EQ(FuseFeatures(empty, a).frames, a.frames);
}

TEST(FeatureSequence, FuseMismatchNamesStreams) {
  FeatureSequence a(Tensor::Matrix(3, 2), 10.0, FeatureKind::kFbk);
  FeatureSequence b(Tensor::Matrix(4, 2), 10.0, FeatureKind::kSsl);
  try {
    FuseFeatures(a, b, "fbk", "ssl");
    FAIL() << "expected a ValidationError";
  } catch (const ValidationError &e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("fbk"), std::string::npos);
    EXPECT_NE(msg.find("ssl"), std::string::npos);
  }
  FeatureSequence c(Tensor::Matrix(3, 2), 20.0, FeatureKind::kSsl);
  EXPECT_THROW(FuseFeatures(a, c), ValidationError);
}

TEST(FeatureSequence, ResampleUpAndDown) {
  FeatureSequence x(Tensor::FromRows({{1}, {3}, {5}}), 20.0, FeatureKind::kFbk);
  FeatureSequence up = ResampleFrames(x, 10.0);
  EXPECT_EQ(up.frames, Tensor::FromRows({{1}, {1}, {3}, {3}, {5}, {5}}));
  FeatureSequence down = ResampleFrames(x, 40.0);
  EXPECT_EQ(down.frames, Tensor::FromRows({{2}, {5}}));
  EXPECT_EQ(ResampleFrames(up, 20.0).frames, x.frames);
  EXPECT_THROW(ResampleFrames(x, 15.0), ValidationError);
}

TEST(FeatureSequence, ValidateRejectsBadPeriod) {
  EXPECT_THROW(FeatureSequence(Tensor::Matrix(2, 2), 0.0, FeatureKind::kFbk), ValidationError);
  FeatureSequence x(Tensor::Matrix(2, 2), 10.0, FeatureKind::kFbk);
  x.frames(0, 0) = std::nan("");
  EXPECT_THROW(x.Validate(), ValidationError);
  EXPECT_THROW(ParseFeatureKind("mfcc"), ValidationError);
}

TEST(Bottleneck, PinnedWeightsExample) {
  Bottleneck b(SmallConfig(1, 1), 0);
  ParameterSet &ps = b.params();
  const BottleneckLayer &l = b.layer();
  ps.value(l.upconv_weight()) = Tensor::FromRows({{1.0, 2.0}});
  ps.value(l.upconv_bias()) = Tensor::Matrix(1, 1);
  ps.value(l.fc1().weight) = Tensor::FromRows({{1.0}});
  ps.value(l.fc1().bias) = Tensor::Matrix(1, 1);
  ps.value(l.downconv_weight()) = Tensor::FromRows({{1.0}, {1.0}});
  ps.value(l.downconv_bias()) = Tensor::Matrix(1, 1);
  ps.value(l.fc2().weight) = Tensor::FromRows({{1.0}});
  ps.value(l.fc2().bias) = Tensor::Matrix(1, 1);
  FeatureSequence x(Tensor::FromRows({{1.0}, {2.0}}), 20.0, FeatureKind::kSsl);
  BottleneckOutput out = b.Forward(x);
  EXPECT_EQ(out.extracted.frames, Tensor::FromRows({{1}, {2}, {2}, {4}}));
  EXPECT_EQ(out.restored.frames, Tensor::FromRows({{3}, {6}}));
  EXPECT_EQ(out.extracted.frame_period_ms, 10.0);
  EXPECT_EQ(out.restored.frame_period_ms, 20.0);
}

TEST(Bottleneck, ShapesForEveryDim) {
  Rng rng(1);
  for (std::size_t dim : {128u, 256u, 512u}) {
    Bottleneck b(SmallConfig(32, dim), dim);
    for (int rep = 0; rep < 5; ++rep) {
      const std::size_t t = 1 + rng.Index(64);
      FeatureSequence x(RandomMatrix(t, 32, &rng), 20.0, FeatureKind::kSsl);
      BottleneckOutput out = b.Forward(x);
      EXPECT_EQ(out.extracted.num_frames(), 2 * t);
      EXPECT_EQ(out.extracted.dim(), dim);
      EXPECT_EQ(out.restored.num_frames(), t);
      EXPECT_EQ(out.restored.dim(), 32u);
    }
  }
}

TEST(Bottleneck, GeneralStrideFactor) {
  BottleneckConfig c = SmallConfig(4, 3);
  c.input_stride_ms = 30.0;
  EXPECT_EQ(c.StrideFactor(), 3u);
  Bottleneck b(c, 2);
  Rng rng(2);
  BottleneckOutput out = b.Forward(FeatureSequence(RandomMatrix(5, 4, &rng), 30.0,
                                                   FeatureKind::kSsl));
  EXPECT_EQ(out.extracted.num_frames(), 15u);
  c.output_stride_ms = 7.0;
  EXPECT_THROW(c.Validate(), ValidationError);
}

TEST(Bottleneck, RejectsWrongInput) {
  Bottleneck b(SmallConfig(4, 3), 0);
  EXPECT_THROW(b.Forward(FeatureSequence(Tensor::Matrix(3, 5), 20.0, FeatureKind::kSsl)),
               ValidationError);
  EXPECT_THROW(b.Forward(FeatureSequence(Tensor::Matrix(3, 4), 10.0, FeatureKind::kSsl)),
               ValidationError);
  EXPECT_THROW(ParseBottleneckPosition("h"), ValidationError);
  EXPECT_EQ(ParseBottleneckPosition("g"), BottleneckPosition::kAfterLastBlock);
}

TEST(Bottleneck, DropoutOnlyInTraining) {
  BottleneckConfig c = SmallConfig(6, 8);
  c.dropout = 0.5;
  Bottleneck b(c, 3);
  Rng rng(4);
  FeatureSequence x(RandomMatrix(4, 6, &rng), 20.0, FeatureKind::kSsl);
  EXPECT_EQ(b.Forward(x).extracted.frames, b.Forward(x).extracted.frames);
  Rng d1(1), d2(2);
  EXPECT_NE(b.Forward(x, true, &d1).extracted.frames, b.Forward(x, true, &d2).extracted.frames);
}

TEST(Bottleneck, GradientWrtInputAndParameters) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Bottleneck b(SmallConfig(4, 3), seed);
    Rng rng(seed + 100);
    const Tensor x = RandomMatrix(3, 4, &rng);
    const Tensor we = RandomMatrix(6, 3, &rng), wr = RandomMatrix(3, 4, &rng);
    // The input rides along as an extra trainable entry so one check covers
    // both the input gradient and every weight.
    ParameterSet ps = b.params();
    const std::size_t xi = ps.Add("input", x);
    const double err = testing::GradCheckParams(&ps, [&](Graph &g) {
      BottleneckVars v = b.layer().Forward(g, g.param(xi));
      return Add(SumAll(Mul(v.extracted, g.Constant(we))),
                 SumAll(Mul(v.restored, g.Constant(wr))));
    });
    EXPECT_LT(err, 1e-4) << "seed " << seed;
  }
}

TEST(ContextNetwork, BottleneckAtEveryPosition) {
  Rng rng(5);
  for (BottleneckPosition pos : {BottleneckPosition::kAfterEncoder,
                                 BottleneckPosition::kAfterMiddleBlock,
                                 BottleneckPosition::kAfterLastBlock}) {
    ContextNetworkConfig c;
    c.input_dim = 6;
    c.model_dim = 8;
    c.num_heads = 2;
    c.ff_dim = 8;
    c.num_blocks = 3;
    BottleneckConfig bc = SmallConfig(8, 16);
    bc.position = pos;
    c.bottleneck = bc;
    ParameterSet ps;
    ContextNetwork net = ContextNetwork::Create(&ps, "net", c, &rng);
    Graph g(ps, false, nullptr, false);
    const std::size_t t = 1 + rng.Index(20);
    ContextOutput out = net.Forward(g, g.Constant(RandomMatrix(t, 6, &rng)));
    ASSERT_TRUE(out.extracted.has_value());
    EXPECT_EQ(out.extracted->rows(), 2 * t) << BottleneckPositionName(pos);
    EXPECT_EQ(out.extracted->cols(), 16u);
    EXPECT_EQ(out.output.rows(), t);
    EXPECT_EQ(out.output.cols(), 8u);
    EXPECT_EQ(out.block_outputs.size(), 3u);
  }
}

TEST(ContextNetwork, BottleneckDimMustMatchModel) {
  ContextNetworkConfig c;
  c.model_dim = 8;
  c.num_heads = 2;
  c.bottleneck = SmallConfig(16, 4);
  EXPECT_THROW(c.Validate(), ValidationError);
}

}  // namespace
}  // namespace asrfuse
