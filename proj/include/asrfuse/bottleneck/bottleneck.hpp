// asrfuse/bottleneck/bottleneck.hpp

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

// The bottleneck insert that re-strides and compresses hidden representations
// of an SSL context network:
//
//   x (T x D, 20 ms)
//     -> transposed conv, kernel = stride = 2     (2T x D, 10 ms)
//     -> FC block: linear, ReLU, dropout          (2T x inner)  <- extracted
//     -> strided conv, kernel = stride = 2        (T x inner, 20 ms)
//     -> FC block: linear, ReLU, dropout          (T x D)       <- restored
//
// The restored stream replaces the hidden state of the host network.

#ifndef ASRFUSE_BOTTLENECK_BOTTLENECK_HPP_
#define ASRFUSE_BOTTLENECK_BOTTLENECK_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "asrfuse/bottleneck/feature_sequence.hpp"
#include "asrfuse/numcore/nn.hpp"

namespace asrfuse {

enum class BottleneckPosition {
  kAfterEncoder,      // (e) before the first transformer block
  kAfterMiddleBlock,  // (f) after block ceil(L/2)
  kAfterLastBlock,    // (g) after the final block
};

inline const char *BottleneckPositionName(BottleneckPosition p) {
  switch (p) {
    case BottleneckPosition::kAfterEncoder: return "after-encoder";
    case BottleneckPosition::kAfterMiddleBlock: return "after-middle-block";
    case BottleneckPosition::kAfterLastBlock: return "after-last-block";
  }
  return "?";
}

inline BottleneckPosition ParseBottleneckPosition(const std::string &s) {
  if (s == "after-encoder" || s == "e") return BottleneckPosition::kAfterEncoder;
  if (s == "after-middle-block" || s == "f") return BottleneckPosition::kAfterMiddleBlock;
  if (s == "after-last-block" || s == "g") return BottleneckPosition::kAfterLastBlock;
  FailValidation("unknown bottleneck position '", s,
                 "' (expected after-encoder|after-middle-block|after-last-block)");
}

struct BottleneckConfig {
  std::size_t inner_dim = 256;
  BottleneckPosition position = BottleneckPosition::kAfterLastBlock;
  std::size_t input_dim = 1024;
  double input_stride_ms = 20.0;
  double output_stride_ms = 10.0;
  double dropout = 0.1;

  /// Re-striding factor; the convolutions use kernel = stride = factor.
  std::size_t StrideFactor() const {
    std::size_t f = 0;
    if (!(output_stride_ms > 0.0) ||
        !internal::IsIntegerRatio(input_stride_ms / output_stride_ms, &f) || f < 2)
      FailValidation("BottleneckConfig: output stride ", output_stride_ms,
                     " ms must divide input stride ", input_stride_ms, " ms");
    return f;
  }

  void Validate() const {
    if (inner_dim == 0) FailValidation("BottleneckConfig: inner dim must be positive");
    if (input_dim == 0) FailValidation("BottleneckConfig: input dim must be positive");
    if (dropout < 0.0 || dropout >= 1.0)
      FailValidation("BottleneckConfig: dropout must be in [0, 1), got ", dropout);
    StrideFactor();
  }
};

struct BottleneckVars {
  Var extracted;  // (factor*T) x inner
  Var restored;   // T x input_dim
};

/// Parameter handles of one bottleneck insert inside a ParameterSet.
class BottleneckLayer {
 public:
  static BottleneckLayer Create(ParameterSet *ps, const std::string &prefix,
                                const BottleneckConfig &config, Rng *rng) {
    config.Validate();
    BottleneckLayer b;
    b.config_ = config;
    const std::size_t f = config.StrideFactor();
    const std::size_t d = config.input_dim, k = config.inner_dim;
    const double lim_up = std::sqrt(6.0 / static_cast<double>(d + f * d));
    const double lim_down = std::sqrt(6.0 / static_cast<double>(f * k + k));
    b.upconv_weight_ =
        ps->Add(prefix + ".upconv.weight", Tensor::RandomUniform(d, f * d, -lim_up, lim_up, rng));
    b.upconv_bias_ = ps->Add(prefix + ".upconv.bias", Tensor::Matrix(1, d));
    b.fc1_ = Linear::Create(ps, prefix + ".fc1", d, k, rng);
    b.downconv_weight_ = ps->Add(prefix + ".downconv.weight",
                                 Tensor::RandomUniform(f * k, k, -lim_down, lim_down, rng));
    b.downconv_bias_ = ps->Add(prefix + ".downconv.bias", Tensor::Matrix(1, k));
    b.fc2_ = Linear::Create(ps, prefix + ".fc2", k, d, rng);
    return b;
  }

  const BottleneckConfig &config() const { return config_; }

  BottleneckVars Forward(Graph &g, Var x) const {
    const std::size_t d = config_.input_dim, k = config_.inner_dim;
    const std::size_t f = config_.StrideFactor();
    if (x.cols() != d)
      FailValidation("Bottleneck: input dim ", x.cols(), " does not match configured ", d);
    const std::size_t t = x.rows();
    // Transposed conv: output frame f*t + j is x_t W_j + b.
    Var up = AddRow(Reshape(MatMul(x, g.param(upconv_weight_)), f * t, d),
                    g.param(upconv_bias_));
    Var extracted = g.MaybeDropout(Relu(fc1_(g, up)), config_.dropout);
    // Strided conv: input frame t sees rows [f*t, f*t + f).
    Var down = AddRow(MatMul(Reshape(extracted, t, f * k), g.param(downconv_weight_)),
                      g.param(downconv_bias_));
    Var restored = g.MaybeDropout(Relu(fc2_(g, down)), config_.dropout);
    return {extracted, restored};
  }

  // Exposed for tests that pin weights to known values.
  std::size_t upconv_weight() const { return upconv_weight_; }
  std::size_t upconv_bias() const { return upconv_bias_; }
  const Linear &fc1() const { return fc1_; }
  std::size_t downconv_weight() const { return downconv_weight_; }
  std::size_t downconv_bias() const { return downconv_bias_; }
  const Linear &fc2() const { return fc2_; }

 private:
  BottleneckConfig config_;
  std::size_t upconv_weight_ = 0, upconv_bias_ = 0;
  Linear fc1_;
  std::size_t downconv_weight_ = 0, downconv_bias_ = 0;
  Linear fc2_;
};

struct BottleneckOutput {
  FeatureSequence extracted;
  FeatureSequence restored;
};

/// A bottleneck insert with its own parameters, usable on feature files.
class Bottleneck {
 public:
  Bottleneck(const BottleneckConfig &config, std::uint64_t seed) {
    Rng rng(seed);
    layer_ = BottleneckLayer::Create(&params_, "bottleneck", config, &rng);
  }

  const BottleneckConfig &config() const { return layer_.config(); }
  const BottleneckLayer &layer() const { return layer_; }
  ParameterSet &params() { return params_; }
  const ParameterSet &params() const { return params_; }

  /// Dropout is only active when `training` is set (and then needs `rng`).
  BottleneckOutput Forward(const FeatureSequence &input, bool training = false,
                           Rng *rng = nullptr) const {
    const BottleneckConfig &c = config();
    if (std::abs(input.frame_period_ms - c.input_stride_ms) > 1e-9)
      FailValidation("Bottleneck: input frame period ", input.frame_period_ms,
                     " ms, expected ", c.input_stride_ms, " ms");
    if (input.dim() != c.input_dim)
      FailValidation("Bottleneck: input dim ", input.dim(), ", expected ", c.input_dim);
    Graph g(params_, training, rng);
    BottleneckVars v = layer_.Forward(g, g.Constant(input.frames));
    return {FeatureSequence(v.extracted.value(), c.output_stride_ms, FeatureKind::kSsl),
            FeatureSequence(v.restored.value(), c.input_stride_ms, FeatureKind::kSsl)};
  }

 private:
  ParameterSet params_;
  BottleneckLayer layer_;
};

}  // namespace asrfuse

#endif  // ASRFUSE_BOTTLENECK_BOTTLENECK_HPP_
