// asrfuse/ssl/model.hpp

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

// Desk-scale SSL model: a context network plus the objective-specific heads
// for contrastive (wav2vec2-style), masked prediction (HuBERT-style),
// teacher-student (Data2vec-style) pre-training and CTC fine-tuning.

#ifndef ASRFUSE_SSL_MODEL_HPP_
#define ASRFUSE_SSL_MODEL_HPP_

#include <optional>
#include <string>
#include <vector>

#include "asrfuse/numcore/optimizer.hpp"
#include "asrfuse/ssl/context_network.hpp"
#include "asrfuse/ssl/ctc.hpp"
#include "asrfuse/ssl/losses.hpp"
#include "asrfuse/ssl/masking.hpp"
#include "asrfuse/ssl/quantizers.hpp"
#include "asrfuse/ssl/synthetic.hpp"

namespace asrfuse {

enum class SslObjective { kWav2vec2, kHubert, kData2vec, kCtc };

inline const char *SslObjectiveName(SslObjective o) {
  switch (o) {
    case SslObjective::kWav2vec2: return "wav2vec2";
    case SslObjective::kHubert: return "hubert";
    case SslObjective::kData2vec: return "data2vec";
    case SslObjective::kCtc: return "ctc";
  }
  return "?";
}

inline SslObjective ParseSslObjective(const std::string &s) {
  if (s == "wav2vec2") return SslObjective::kWav2vec2;
  if (s == "hubert") return SslObjective::kHubert;
  if (s == "data2vec") return SslObjective::kData2vec;
  if (s == "ctc") return SslObjective::kCtc;
  FailValidation("unknown SSL objective '", s, "' (expected wav2vec2|hubert|data2vec|ctc)");
}

struct SslModelConfig {
  SslObjective objective = SslObjective::kHubert;
  ContextNetworkConfig network;
  MaskSpec mask;

  // Contrastive objective.
  std::size_t num_codebooks = 2;
  std::size_t codebook_size = 8;
  double gumbel_temperature = 2.0;
  std::size_t num_distractors = 10;
  double kappa = 0.1;
  double diversity_weight = 0.1;

  // Masked prediction.
  std::vector<std::size_t> kmeans_sizes{8, 16};
  std::size_t kmeans_iterations = 10;
  std::size_t projection_dim = 32;
  double tau = 0.1;

  // Teacher-student.
  double ema_decay = 0.05;
  std::size_t top_k = 2;
  double beta = 0.25;

  // CTC fine-tuning: outputs are blank (index 0) plus vocab_size tokens.
  std::size_t vocab_size = 8;

  void Validate() const {
    network.Validate();
    mask.Validate();
    if (!(kappa > 0.0)) FailValidation("SslModel: kappa must be positive");
    if (!(tau > 0.0)) FailValidation("SslModel: tau must be positive");
    if (!(beta > 0.0)) FailValidation("SslModel: beta must be positive");
    if (ema_decay < 0.0 || ema_decay > 1.0) FailValidation("SslModel: EMA decay outside [0, 1]");
    if (top_k == 0 || top_k > network.num_blocks)
      FailValidation("SslModel: top_k=", top_k, " must be in [1, ", network.num_blocks, "]");
    if (objective == SslObjective::kWav2vec2) {
      if (num_codebooks == 0 || codebook_size < 2)
        FailValidation("SslModel: need G >= 1 codebooks with V >= 2 entries");
      if (network.model_dim % num_codebooks != 0)
        FailValidation("SslModel: G=", num_codebooks, " must divide model dim");
      if (num_distractors == 0) FailValidation("SslModel: need at least one distractor");
      if (!(gumbel_temperature > 0.0)) FailValidation("SslModel: Gumbel temperature <= 0");
    }
    if (objective == SslObjective::kHubert && kmeans_sizes.empty())
      FailValidation("SslModel: need at least one k-means codebook");
    if (objective == SslObjective::kCtc && vocab_size == 0)
      FailValidation("SslModel: CTC vocabulary is empty");
  }
};

/// Training example: input frames plus (for CTC) the 1-based label sequence.
struct SslExample {
  Tensor features;
  std::vector<std::size_t> labels;
};

struct SslLossTerms {
  Var total;
  double contrastive = 0.0;
  double diversity = 0.0;
};

class SslModel {
 public:
  SslModel(const SslModelConfig &config, std::uint64_t seed) : config_(config) {
    config_.Validate();
    Rng rng(seed);
    const std::size_t d = config_.network.model_dim;
    network_ = ContextNetwork::Create(&params_, "net", config_.network, &rng);
    if (config_.objective != SslObjective::kCtc)
      mask_embedding_ = params_.Add("mask_embedding", Tensor::RandomUniform(1, d, 0.0, 1.0, &rng));
    switch (config_.objective) {
      case SslObjective::kWav2vec2: {
        const std::size_t gv = config_.num_codebooks * config_.codebook_size;
        quant_logits_ = Linear::Create(&params_, "quant.logits", d, gv, &rng);
        for (std::size_t g = 0; g < config_.num_codebooks; ++g)
          codewords_.push_back(params_.Add(
              "quant.codewords" + std::to_string(g),
              Tensor::RandomNormal(config_.codebook_size, d / config_.num_codebooks, 1.0, &rng)));
        quant_out_ = Linear::Create(&params_, "quant.out", d, d, &rng);
        final_proj_ = Linear::Create(&params_, "final_proj", d, d, &rng);
        break;
      }
      case SslObjective::kHubert:
        for (std::size_t g = 0; g < config_.kmeans_sizes.size(); ++g) {
          const std::string gs = std::to_string(g);
          label_proj_.push_back(
              Linear::Create(&params_, "label_proj" + gs, d, config_.projection_dim, &rng));
          codewords_.push_back(params_.Add(
              "label_embedding" + gs,
              Tensor::RandomNormal(config_.kmeans_sizes[g], config_.projection_dim, 1.0, &rng)));
          centroids_.push_back(params_.Add(
              "kmeans" + gs,
              Tensor::Matrix(config_.kmeans_sizes[g], config_.network.input_dim), false));
        }
        break;
      case SslObjective::kData2vec:
        final_proj_ = Linear::Create(&params_, "final_proj", d, d, &rng);
        teacher_ = params_;
        break;
      case SslObjective::kCtc:
        ctc_head_ = Linear::Create(&params_, "ctc_head", d, config_.vocab_size + 1, &rng);
        break;
    }
  }

  const SslModelConfig &config() const { return config_; }
  ParameterSet &params() { return params_; }
  const ParameterSet &params() const { return params_; }
  const ContextNetwork &network() const { return network_; }

  /// EMA teacher parameters (data2vec objective only).
  bool has_teacher() const { return teacher_.has_value(); }
  ParameterSet &teacher() {
    if (!teacher_) FailValidation("SslModel: objective has no teacher");
    return *teacher_;
  }
  const ParameterSet &teacher() const {
    if (!teacher_) FailValidation("SslModel: objective has no teacher");
    return *teacher_;
  }

  /// Fits the k-means pseudo-label codebooks on the given frames (masked
  /// prediction objective).
  void FitPseudoLabels(const Tensor &frames, std::uint64_t seed) {
    if (config_.objective != SslObjective::kHubert) return;
    KMeansQuantizer q = KMeansQuantizer::Fit(frames, config_.kmeans_sizes,
                                             config_.kmeans_iterations, seed);
    for (std::size_t g = 0; g < centroids_.size(); ++g)
      params_.value(centroids_[g]) = q.centroids()[g];
  }

  KMeansQuantizer PseudoLabeler() const {
    std::vector<Tensor> c;
    for (std::size_t idx : centroids_) c.push_back(params_.value(idx));
    return KMeansQuantizer(std::move(c));
  }

  /// Loss of a batch.  Masks, distractors and Gumbel noise are drawn from
  /// `rng`; dropout uses the graph's rng.
  SslLossTerms BatchLoss(Graph &g, const std::vector<SslExample> &batch, Rng *rng) const {
    if (batch.empty()) FailValidation("SslModel: empty batch");
    switch (config_.objective) {
      case SslObjective::kWav2vec2: return ContrastiveBatch(g, batch, rng);
      case SslObjective::kHubert: return {MaskedPredictionBatch(g, batch, rng)};
      case SslObjective::kData2vec: return {TeacherStudentBatch(g, batch, rng)};
      case SslObjective::kCtc: return {CtcBatch(g, batch)};
    }
    FailValidation("SslModel: unknown objective");
  }

  /// Bottleneck features of one utterance in evaluation mode.
  FeatureSequence Extract(const FeatureSequence &input) const {
    if (!network_.has_bottleneck())
      FailValidation("SslModel: model has no bottleneck insert");
    const BottleneckConfig &bc = *config_.network.bottleneck;
    if (std::abs(input.frame_period_ms - bc.input_stride_ms) > 1e-9)
      FailValidation("SslModel::Extract: input frame period ", input.frame_period_ms,
                     " ms, expected ", bc.input_stride_ms, " ms");
    Graph g(params_, false, nullptr, false);
    ContextOutput out = network_.Forward(g, g.Constant(input.frames));
    return FeatureSequence(out.extracted->value(), bc.output_stride_ms, FeatureKind::kSsl);
  }

  /// Context network output (T x d) in evaluation mode.
  Tensor Encode(const Tensor &features) const {
    Graph g(params_, false, nullptr, false);
    return network_.Forward(g, g.Constant(features)).output.value();
  }

  /// Per-frame CTC log-probabilities (CTC objective).
  Tensor CtcLogProbs(const Tensor &features) const {
    if (config_.objective != SslObjective::kCtc)
      FailValidation("SslModel: not a CTC model");
    Graph g(params_, false, nullptr, false);
    return LogSoftmaxRows(ctc_head_(g, network_.Forward(g, g.Constant(features)).output))
        .value();
  }

 private:
  // Replaces the masked rows of z with the learned mask embedding.
  Var ApplyMask(Graph &g, Var z, const std::vector<std::size_t> &mask) const {
    const std::size_t t = z.rows(), d = z.cols();
    Tensor keep = Tensor::Matrix(t, d, 1.0), put = Tensor::Matrix(t, d, 0.0);
    for (std::size_t r : mask)
      for (std::size_t j = 0; j < d; ++j) {
        keep(r, j) = 0.0;
        put(r, j) = 1.0;
      }
    return Add(Mul(z, g.Constant(std::move(keep))),
               Mul(BroadcastRows(g.param(mask_embedding_), t), g.Constant(std::move(put))));
  }

  SslLossTerms ContrastiveBatch(Graph &g, const std::vector<SslExample> &batch, Rng *rng) const {
    const std::size_t gcount = config_.num_codebooks, v = config_.codebook_size;
    std::vector<Var> probs;
    Var contrastive{};
    bool first = true;
    for (const SslExample &ex : batch) {
      Var z = network_.Encode(g, g.Constant(ex.features));
      MaskSpec spec = config_.mask;
      spec.min_spans = std::max<std::size_t>(spec.min_spans, 1);
      std::vector<std::size_t> mask = ComputeMask(z.rows(), spec, rng);
      if (mask.size() < 2) {
        // Contrast needs at least one other masked frame.
        for (std::size_t t = 0; t < z.rows() && mask.size() < 2; ++t)
          if (std::find(mask.begin(), mask.end(), t) == mask.end()) mask.push_back(t);
        std::sort(mask.begin(), mask.end());
      }
      if (mask.size() < 2) FailValidation("SslModel: utterance too short for contrast");
      ContextOutput ctx = network_.Contextualize(g, ApplyMask(g, z, mask));
      Var c = final_proj_(g, GatherRows(ctx.output, mask));

      Var logits = quant_logits_(g, z);
      std::vector<Var> codes;
      for (std::size_t k = 0; k < gcount; ++k) {
        Var lk = SliceCols(logits, k * v, v);
        GumbelSelection sel = GumbelSelect(lk, config_.gumbel_temperature, rng);
        codes.push_back(MatMul(sel.hard, g.param(codewords_[k])));
        probs.push_back(SoftmaxRows(lk));
      }
      Var q = quant_out_(g, ConcatCols(codes));
      Var qm = GatherRows(q, mask);
      auto distractors = SampleDistractors(mask.size(), config_.num_distractors, rng);
      Var lc = ContrastiveLoss(c, qm, distractors, config_.kappa);
      contrastive = first ? lc : Add(contrastive, lc);
      first = false;
    }
    // probs holds G entries per utterance; regroup into N x (G V).
    std::vector<Var> rows;
    for (std::size_t u = 0; u < batch.size(); ++u) {
      std::vector<Var> per_cb(probs.begin() + static_cast<std::ptrdiff_t>(u * gcount),
                              probs.begin() + static_cast<std::ptrdiff_t>((u + 1) * gcount));
      rows.push_back(ConcatCols(per_cb));
    }
    Var ld = DiversityLoss(ConcatRows(rows), gcount, v, config_.diversity_weight);
    return {Add(contrastive, ld), contrastive.value().item(), ld.value().item()};
  }

  Var MaskedPredictionBatch(Graph &g, const std::vector<SslExample> &batch, Rng *rng) const {
    const KMeansQuantizer labeler = PseudoLabeler();
    Var total{};
    bool first = true;
    for (const SslExample &ex : batch) {
      const auto labels = labeler.Assign(ex.features);
      Var z = network_.Encode(g, g.Constant(ex.features));
      std::vector<std::size_t> mask = ComputeMask(z.rows(), config_.mask, rng);
      ContextOutput ctx = network_.Contextualize(g, ApplyMask(g, z, mask));
      Var cm = GatherRows(ctx.output, mask);
      std::vector<Var> projected, codewords;
      std::vector<std::vector<std::size_t>> masked_labels;
      for (std::size_t k = 0; k < label_proj_.size(); ++k) {
        projected.push_back(label_proj_[k](g, cm));
        codewords.push_back(g.param(codewords_[k]));
        std::vector<std::size_t> lk;
        for (std::size_t t : mask) lk.push_back(labels[k][t]);
        masked_labels.push_back(std::move(lk));
      }
      Var l = MaskedPredictionLoss(projected, codewords, masked_labels, config_.tau);
      total = first ? l : Add(total, l);
      first = false;
    }
    return total;
  }

  Var TeacherStudentBatch(Graph &g, const std::vector<SslExample> &batch, Rng *rng) const {
    Var total{};
    bool first = true;
    for (const SslExample &ex : batch) {
      Graph tg(*teacher_, false, nullptr, false);
      ContextOutput tout = network_.Forward(tg, tg.Constant(ex.features));
      std::vector<Tensor> blocks;
      for (const Var &b : tout.block_outputs) blocks.push_back(b.value());

      Var z = network_.Encode(g, g.Constant(ex.features));
      std::vector<std::size_t> mask = ComputeMask(z.rows(), config_.mask, rng);
      ContextOutput ctx = network_.Contextualize(g, ApplyMask(g, z, mask));
      Var pred = final_proj_(g, ctx.output);
      Var l = Data2vecLoss(pred, blocks, config_.top_k, mask, config_.beta);
      total = first ? l : Add(total, l);
      first = false;
    }
    return total;
  }

  Var CtcBatch(Graph &g, const std::vector<SslExample> &batch) const {
    Var total{};
    bool first = true;
    for (const SslExample &ex : batch) {
      Var out = network_.Forward(g, g.Constant(ex.features)).output;
      Var l = CtcLoss(LogSoftmaxRows(ctc_head_(g, out)), ex.labels, 0);
      total = first ? l : Add(total, l);
      first = false;
    }
    return total;
  }

  SslModelConfig config_;
  ParameterSet params_;
  ContextNetwork network_;
  std::size_t mask_embedding_ = 0;
  Linear quant_logits_, quant_out_, final_proj_, ctc_head_;
  std::vector<std::size_t> codewords_;
  std::vector<Linear> label_proj_;
  std::vector<std::size_t> centroids_;
  std::optional<ParameterSet> teacher_;
};

struct SslTrainOptions {
  std::size_t epochs = 10;
  std::size_t batch_size = 2;
  OptimizerOptions optimizer{OptimizerKind::kAdam, 1e-3, LrSchedule::kLinearDecay, 0};
  std::uint64_t seed = 0;
};

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double loss = 0.0;
  double learning_rate = 0.0;
};

/// Minibatch training loop.  Each step draws its randomness from
/// Rng(seed, step) and each epoch's order from Rng(seed, epoch tag), so a run
/// resumed at an epoch boundary reproduces the uninterrupted trajectory.
class SslTrainer {
 public:
  /// Linear decay spans every step of the run, which depends on the number
  /// of training examples.
  SslTrainer(SslModel *model, SslTrainOptions options, std::size_t num_examples)
      : model_(model),
        options_(options),
        optimizer_(MakeOptimizerOptions(options, num_examples)) {}

  Optimizer &optimizer() { return optimizer_; }
  const SslTrainOptions &options() const { return options_; }

  static std::size_t StepsPerEpoch(std::size_t num_examples, std::size_t batch_size) {
    return (num_examples + batch_size - 1) / batch_size;
  }

  /// Trains epochs [first_epoch, options.epochs).  `on_epoch` receives the
  /// mean minibatch loss of every finished epoch.
  template <typename Callback>
  void Train(const std::vector<SslExample> &data, std::size_t first_epoch, Callback on_epoch) {
    if (data.empty()) FailValidation("SslTrainer: no training data");
    if (options_.batch_size == 0) FailValidation("SslTrainer: batch size must be positive");
    for (std::size_t epoch = first_epoch; epoch < options_.epochs; ++epoch) {
      std::vector<std::size_t> order(data.size());
      std::iota(order.begin(), order.end(), 0);
      Rng order_rng(options_.seed, (std::uint64_t{1} << 40) + epoch);
      order_rng.Shuffle(&order);
      double sum = 0.0;
      std::size_t batches = 0;
      const double lr = optimizer_.CurrentLearningRate();
      for (std::size_t b = 0; b < order.size(); b += options_.batch_size) {
        std::vector<SslExample> batch;
        for (std::size_t i = b; i < std::min(order.size(), b + options_.batch_size); ++i)
          batch.push_back(data[order[i]]);
        try {
          sum += Step(batch);
        } catch (const NumericalError &e) {
          FailNumerical("epoch ", epoch + 1, ": ", e.what());
        }
        ++batches;
      }
      on_epoch(EpochLog{epoch + 1, optimizer_.step(), sum / static_cast<double>(batches), lr});
    }
  }

  /// One optimizer update on `batch`; returns the loss before the update.
  double Step(const std::vector<SslExample> &batch) {
    const std::size_t step = optimizer_.step();
    Rng rng(options_.seed, step);
    Rng dropout_rng(options_.seed ^ 0xD50F, step);
    Graph g(model_->params(), true, &dropout_rng);
    Var loss = model_->BatchLoss(g, batch, &rng).total;
    const double value = loss.value().item();
    if (!std::isfinite(value)) FailNumerical("SslTrainer: non-finite loss at step ", step);
    g.Backward(loss);
    optimizer_.Step(&model_->params(), g.ParameterGrads());
    if (model_->has_teacher())
      EmaUpdate(&model_->teacher(), model_->params(), optimizer_.step(),
                model_->config().ema_decay);
    return value;
  }

 private:
  static OptimizerOptions MakeOptimizerOptions(const SslTrainOptions &o,
                                               std::size_t num_examples) {
    if (o.batch_size == 0) FailValidation("SslTrainer: batch size must be positive");
    OptimizerOptions opts = o.optimizer;
    if (opts.total_steps == 0)
      opts.total_steps =
          std::max<std::size_t>(1, o.epochs * StepsPerEpoch(num_examples, o.batch_size));
    return opts;
  }

  SslModel *model_;
  SslTrainOptions options_;
  Optimizer optimizer_;
};

inline std::vector<SslExample> ToSslExamples(const std::vector<TokenUtterance> &corpus) {
  std::vector<SslExample> out;
  for (const auto &u : corpus) out.push_back({u.features.frames, u.labels});
  return out;
}

}  // namespace asrfuse

#endif  // ASRFUSE_SSL_MODEL_HPP_
