// asrfuse/ssl/context_network.hpp

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

#ifndef ASRFUSE_SSL_CONTEXT_NETWORK_HPP_
#define ASRFUSE_SSL_CONTEXT_NETWORK_HPP_

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "asrfuse/bottleneck/bottleneck.hpp"
#include "asrfuse/numcore/nn.hpp"

namespace asrfuse {

struct ContextNetworkConfig {
  std::size_t input_dim = 40;
  std::size_t model_dim = 64;
  std::size_t num_heads = 4;
  std::size_t ff_dim = 128;
  std::size_t num_blocks = 4;
  double dropout = 0.0;
  // Inner dim and position of an optional bottleneck insert; its input dim is
  // always the model dim.
  std::optional<BottleneckConfig> bottleneck;

  void Validate() const {
    if (num_blocks == 0) FailValidation("ContextNetwork: need at least one block");
    if (model_dim == 0 || input_dim == 0 || ff_dim == 0)
      FailValidation("ContextNetwork: dimensions must be positive");
    if (num_heads == 0 || model_dim % num_heads != 0)
      FailValidation("ContextNetwork: ", num_heads, " heads do not divide model dim ",
                     model_dim);
    if (bottleneck) {
      bottleneck->Validate();
      if (bottleneck->input_dim != model_dim)
        FailValidation("ContextNetwork: bottleneck input dim ", bottleneck->input_dim,
                       " must equal model dim ", model_dim);
    }
  }

  /// Number of blocks run before an after-middle-block insert.
  std::size_t MiddleBlock() const { return (num_blocks + 1) / 2; }
};

/// Pre-norm transformer block: x + MHA(LN(x)), then h + FF(LN(h)).
class TransformerBlock {
 public:
  static TransformerBlock Create(ParameterSet *ps, const std::string &prefix,
                                 const ContextNetworkConfig &c, Rng *rng) {
    TransformerBlock b;
    b.heads_ = c.num_heads;
    b.dropout_ = c.dropout;
    b.ln1_ = LayerNorm::Create(ps, prefix + ".ln1", c.model_dim);
    b.query_ = Linear::Create(ps, prefix + ".attn.query", c.model_dim, c.model_dim, rng);
    b.key_ = Linear::Create(ps, prefix + ".attn.key", c.model_dim, c.model_dim, rng);
    b.value_ = Linear::Create(ps, prefix + ".attn.value", c.model_dim, c.model_dim, rng);
    b.out_ = Linear::Create(ps, prefix + ".attn.out", c.model_dim, c.model_dim, rng);
    b.ln2_ = LayerNorm::Create(ps, prefix + ".ln2", c.model_dim);
    b.ff1_ = Linear::Create(ps, prefix + ".ff1", c.model_dim, c.ff_dim, rng);
    b.ff2_ = Linear::Create(ps, prefix + ".ff2", c.ff_dim, c.model_dim, rng);
    return b;
  }

  Var Forward(Graph &g, Var x) const {
    const std::size_t d = x.cols(), dh = d / heads_;
    Var h = ln1_(g, x);
    Var q = query_(g, h), k = key_(g, h), v = value_(g, h);
    std::vector<Var> per_head;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (std::size_t i = 0; i < heads_; ++i) {
      Var qi = SliceCols(q, i * dh, dh), ki = SliceCols(k, i * dh, dh);
      Var vi = SliceCols(v, i * dh, dh);
      Var att = SoftmaxRows(Scale(MatMul(qi, Transpose(ki)), scale));
      per_head.push_back(MatMul(att, vi));
    }
    Var attn = g.MaybeDropout(out_(g, ConcatCols(per_head)), dropout_);
    Var x1 = Add(x, attn);
    Var ff = ff2_(g, Relu(ff1_(g, ln2_(g, x1))));
    return Add(x1, g.MaybeDropout(ff, dropout_));
  }

 private:
  std::size_t heads_ = 1;
  double dropout_ = 0.0;
  LayerNorm ln1_, ln2_;
  Linear query_, key_, value_, out_, ff1_, ff2_;
};

struct ContextOutput {
  Var output;                      // T x d after the last block (and any insert)
  std::vector<Var> block_outputs;  // raw output of each block
  std::optional<Var> extracted;    // bottleneck features, 2T x inner
};

/// Linear frame encoder followed by a stack of transformer blocks, with an
/// optional bottleneck insert at one of three positions.  The encoder stands
/// in for the convolutional waveform encoder: inputs are feature frames.
class ContextNetwork {
 public:
  static ContextNetwork Create(ParameterSet *ps, const std::string &prefix,
                               const ContextNetworkConfig &config, Rng *rng) {
    config.Validate();
    ContextNetwork n;
    n.config_ = config;
    n.encoder_ = Linear::Create(ps, prefix + ".encoder", config.input_dim, config.model_dim, rng);
    for (std::size_t i = 0; i < config.num_blocks; ++i)
      n.blocks_.push_back(
          TransformerBlock::Create(ps, prefix + ".block" + std::to_string(i), config, rng));
    if (config.bottleneck)
      n.bottleneck_ = BottleneckLayer::Create(ps, prefix + ".bottleneck", *config.bottleneck, rng);
    return n;
  }

  const ContextNetworkConfig &config() const { return config_; }
  bool has_bottleneck() const { return bottleneck_.has_value(); }

  /// Frame encoder: T x input_dim -> T x d (latent z before masking).
  Var Encode(Graph &g, Var features) const {
    if (features.cols() != config_.input_dim)
      FailValidation("ContextNetwork: input dim ", features.cols(), ", expected ",
                     config_.input_dim);
    return encoder_(g, features);
  }

  /// Transformer stack over (possibly masked) latents, with sinusoidal
  /// positions added first.
  ContextOutput Contextualize(Graph &g, Var latents) const {
    ContextOutput out;
    Var h = Add(latents, g.Constant(PositionalEncoding(latents.rows(), latents.cols())));
    h = MaybeInsert(g, h, BottleneckPosition::kAfterEncoder, &out);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      h = blocks_[i].Forward(g, h);
      out.block_outputs.push_back(h);
      if (i + 1 == config_.MiddleBlock())
        h = MaybeInsert(g, h, BottleneckPosition::kAfterMiddleBlock, &out);
    }
    h = MaybeInsert(g, h, BottleneckPosition::kAfterLastBlock, &out);
    out.output = h;
    return out;
  }

  ContextOutput Forward(Graph &g, Var features) const {
    return Contextualize(g, Encode(g, features));
  }

  static Tensor PositionalEncoding(std::size_t t, std::size_t d) {
    Tensor pe = Tensor::Matrix(t, d);
    for (std::size_t pos = 0; pos < t; ++pos) {
      for (std::size_t i = 0; i < d; ++i) {
        const double rate =
            std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
        const double a = static_cast<double>(pos) * rate;
        pe(pos, i) = (i % 2 == 0) ? std::sin(a) : std::cos(a);
      }
    }
    return pe;
  }

 private:
  Var MaybeInsert(Graph &g, Var h, BottleneckPosition where, ContextOutput *out) const {
    if (!bottleneck_ || bottleneck_->config().position != where) return h;
    BottleneckVars v = bottleneck_->Forward(g, h);
    out->extracted = v.extracted;
    return v.restored;
  }

  ContextNetworkConfig config_;
  Linear encoder_;
  std::vector<TransformerBlock> blocks_;
  std::optional<BottleneckLayer> bottleneck_;
};

}  // namespace asrfuse

#endif  // ASRFUSE_SSL_CONTEXT_NETWORK_HPP_
