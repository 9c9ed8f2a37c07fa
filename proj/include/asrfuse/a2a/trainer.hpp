// asrfuse/a2a/trainer.hpp

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

#ifndef ASRFUSE_A2A_TRAINER_HPP_
#define ASRFUSE_A2A_TRAINER_HPP_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "asrfuse/a2a/mdn.hpp"
#include "asrfuse/a2a/synthetic.hpp"
#include "asrfuse/numcore/optimizer.hpp"

namespace asrfuse {

struct A2aTrainOptions {
  std::size_t epochs = 20;
  std::size_t chunk_frames = 250;
  OptimizerOptions optimizer{OptimizerKind::kAdam, 1e-3, LrSchedule::kLinearDecay};
  MtlWeights weights;
  std::uint64_t seed = 0;
};

struct A2aEpochLog {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double loss = 0.0;  // mean MTL loss per chunk, after the epoch's updates
  double mdn = 0.0;
  double mse = 0.0;
  double pearson = 0.0;
  double learning_rate = 0.0;
};

/// Contiguous frame window [begin, begin + length) of one pair.
struct FrameChunk {
  std::size_t pair = 0;
  std::size_t begin = 0;
  std::size_t length = 0;
};

/// Splits every pair into windows of `chunk_frames`; a trailing window
/// shorter than two frames is merged into its predecessor so that every
/// chunk supports a correlation.
inline std::vector<FrameChunk> MakeChunks(const std::vector<ParallelPair> &pairs,
                                          std::size_t chunk_frames) {
  if (chunk_frames < 2) FailValidation("MakeChunks: chunk length must be >= 2");
  std::vector<FrameChunk> chunks;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const std::size_t t = pairs[p].acoustic.num_frames();
    if (t < 2) FailValidation("MakeChunks: pair '", pairs[p].utt_id, "' has fewer than 2 frames");
    for (std::size_t b = 0; b < t; b += chunk_frames) {
      const std::size_t len = std::min(chunk_frames, t - b);
      if (len < 2) {
        chunks.back().length += len;
      } else {
        chunks.push_back({p, b, len});
      }
    }
  }
  return chunks;
}

class A2aTrainer {
 public:
  A2aTrainer(MdnNetwork *net, A2aTrainOptions options, const std::vector<ParallelPair> &data)
      : net_(net), options_(options), data_(data) {
    if (data_.empty()) FailValidation("A2aTrainer: no training data");
    options_.weights.Validate();
    for (const auto &p : data_) {
      p.Validate();
      if (p.acoustic.dim() != net_->config().input_dim ||
          p.articulatory.dim() != net_->config().output_dim)
        FailValidation("A2aTrainer: pair '", p.utt_id, "' dims (", p.acoustic.dim(), ", ",
                       p.articulatory.dim(), ") do not match the network (",
                       net_->config().input_dim, ", ", net_->config().output_dim, ")");
    }
    chunks_ = MakeChunks(data_, options_.chunk_frames);
    OptimizerOptions opt = options_.optimizer;
    if (opt.total_steps == 0)
      opt.total_steps = std::max<std::size_t>(1, options_.epochs * chunks_.size());
    optimizer_.emplace(opt);
  }

  Optimizer &optimizer() { return *optimizer_; }
  std::size_t num_chunks() const { return chunks_.size(); }

  template <typename Callback>
  void Train(std::size_t first_epoch, Callback on_epoch) {
    for (std::size_t epoch = first_epoch; epoch < options_.epochs; ++epoch) {
      std::vector<std::size_t> order(chunks_.size());
      std::iota(order.begin(), order.end(), 0);
      Rng order_rng(options_.seed, epoch);
      order_rng.Shuffle(&order);
      const double lr = optimizer_->CurrentLearningRate();
      for (std::size_t c : order) Step(chunks_[c]);
      A2aEpochLog log = Evaluate();
      log.epoch = epoch + 1;
      log.step = optimizer_->step();
      log.learning_rate = lr;
      if (!std::isfinite(log.loss)) FailNumerical("A2aTrainer: non-finite loss in epoch ", epoch + 1);
      on_epoch(log);
    }
  }

  /// Mean MTL loss over all training chunks with the current parameters.
  A2aEpochLog Evaluate() const {
    A2aEpochLog log;
    for (const FrameChunk &c : chunks_) {
      Graph g(net_->params(), false, nullptr, false);
      MtlTerms terms = ChunkLoss(g, c);
      log.loss += terms.total.value().item();
      log.mdn += terms.mdn;
      log.mse += terms.mse;
      log.pearson += terms.pearson;
    }
    const double n = static_cast<double>(chunks_.size());
    log.loss /= n;
    log.mdn /= n;
    log.mse /= n;
    log.pearson /= n;
    return log;
  }

 private:
  MtlTerms ChunkLoss(Graph &g, const FrameChunk &c) const {
    const ParallelPair &p = data_[c.pair];
    Var x = g.Constant(p.acoustic.frames.RowRange(c.begin, c.length));
    MdnOutputs o = net_->Forward(g, x);
    return MtlLoss(o, p.articulatory.frames.RowRange(c.begin, c.length), options_.weights,
                   net_->config().sigma_floor);
  }

  void Step(const FrameChunk &c) {
    Graph g(net_->params(), true);
    MtlTerms terms = ChunkLoss(g, c);
    const double value = terms.total.value().item();
    if (!std::isfinite(value))
      FailNumerical("A2aTrainer: non-finite loss at step ", optimizer_->step());
    g.Backward(terms.total);
    optimizer_->Step(&net_->params(), g.ParameterGrads());
  }

  MdnNetwork *net_;
  A2aTrainOptions options_;
  const std::vector<ParallelPair> &data_;
  std::vector<FrameChunk> chunks_;
  std::optional<Optimizer> optimizer_;
};

/// Mean per-dimension Pearson correlation of the inverted trajectories
/// against the ground truth, pooled over all frames of `pairs`.
inline double HeldOutPearson(const MdnNetwork &net, const std::vector<ParallelPair> &pairs) {
  std::vector<Tensor> preds, refs;
  std::size_t total = 0;
  for (const auto &p : pairs) {
    preds.push_back(net.Invert(p.acoustic).frames);
    refs.push_back(p.articulatory.frames);
    total += p.articulatory.num_frames();
  }
  if (pairs.empty()) FailValidation("HeldOutPearson: no pairs");
  const std::size_t d = refs[0].cols();
  Tensor y = Tensor::Matrix(total, d), a = Tensor::Matrix(total, d);
  std::size_t row = 0;
  for (std::size_t k = 0; k < preds.size(); ++k)
    for (std::size_t t = 0; t < preds[k].rows(); ++t, ++row)
      for (std::size_t j = 0; j < d; ++j) {
        y(row, j) = preds[k](t, j);
        a(row, j) = refs[k](t, j);
      }
  Tape tape;
  return PearsonCorrelation(tape.Constant(std::move(y)), a).value().item();
}

}  // namespace asrfuse

#endif  // ASRFUSE_A2A_TRAINER_HPP_
