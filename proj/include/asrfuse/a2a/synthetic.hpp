// asrfuse/a2a/synthetic.hpp

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

#ifndef ASRFUSE_A2A_SYNTHETIC_HPP_
#define ASRFUSE_A2A_SYNTHETIC_HPP_

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "asrfuse/bottleneck/feature_sequence.hpp"

namespace asrfuse {

struct ParallelPair {
  std::string utt_id;
  FeatureSequence acoustic;
  FeatureSequence articulatory;

  void Validate() const {
    acoustic.Validate();
    articulatory.Validate();
    if (acoustic.num_frames() != articulatory.num_frames() ||
        acoustic.frame_period_ms != articulatory.frame_period_ms)
      FailValidation("ParallelPair '", utt_id, "': acoustic and articulatory streams differ in ",
                     "frame count or period");
  }
};

struct ParallelCorpusOptions {
  std::size_t num_utterances = 5;
  std::size_t num_frames = 500;
  std::size_t articulatory_dim = 4;
  std::size_t acoustic_dim = 8;
  double noise = 0.05;
  double frame_period_ms = 10.0;
  double min_frequency_hz = 0.5;
  double max_frequency_hz = 4.0;
  double amplitude = 1.0;
  // Overrides for the random map (acoustic_dim x articulatory_dim, 1 x acoustic_dim).
  std::optional<Tensor> weight;
  std::optional<Tensor> bias;
};

struct ParallelCorpus {
  std::vector<ParallelPair> pairs;
  Tensor weight;  // W: acoustic_dim x articulatory_dim
  Tensor bias;    // b: 1 x acoustic_dim
};

namespace internal {

inline std::size_t MatrixRank(Tensor m) {
  const std::size_t r = m.rows(), c = m.cols();
  std::size_t rank = 0;
  for (std::size_t col = 0; col < c && rank < r; ++col) {
    std::size_t piv = rank;
    for (std::size_t i = rank + 1; i < r; ++i)
      if (std::abs(m(i, col)) > std::abs(m(piv, col))) piv = i;
    if (std::abs(m(piv, col)) < 1e-9) continue;
    for (std::size_t j = 0; j < c; ++j) std::swap(m(piv, j), m(rank, j));
    for (std::size_t i = rank + 1; i < r; ++i) {
      const double f = m(i, col) / m(rank, col);
      for (std::size_t j = col; j < c; ++j) m(i, j) -= f * m(rank, j);
    }
    ++rank;
  }
  return rank;
}

}  // namespace internal

/// Articulatory trajectories are sums of three random-phase sinusoids per
/// dimension, each of amplitude `amplitude / 3`; acoustics are
/// tanh(W a_t + b) plus Gaussian noise.
inline ParallelCorpus GenerateParallel(std::uint64_t seed, const ParallelCorpusOptions &o) {
  if (o.num_frames < 16) FailValidation("GenerateParallel: need T >= 16, got ", o.num_frames);
  if (o.articulatory_dim == 0) FailValidation("GenerateParallel: articulatory dim is zero");
  if (o.acoustic_dim < o.articulatory_dim)
    FailValidation("GenerateParallel: acoustic dim ", o.acoustic_dim,
                   " < articulatory dim ", o.articulatory_dim, " (map not invertible)");
  if (o.noise < 0.0) FailValidation("GenerateParallel: noise must be >= 0");
  if (!(o.frame_period_ms > 0.0)) FailValidation("GenerateParallel: frame period must be > 0");
  if (!(o.min_frequency_hz > 0.0) || o.max_frequency_hz < o.min_frequency_hz)
    FailValidation("GenerateParallel: invalid frequency range");
  const std::size_t da = o.articulatory_dim, dc = o.acoustic_dim;

  ParallelCorpus out;
  Rng map_rng(seed, 0);
  if (o.weight) {
    if (o.weight->rows() != dc || o.weight->cols() != da)
      FailValidation("GenerateParallel: weight override is ", o.weight->ShapeString(),
                     ", expected [", dc, " x ", da, "]");
    out.weight = *o.weight;
  } else {
    const double sd = 1.0 / std::sqrt(static_cast<double>(da));
    do {
      out.weight = Tensor::RandomNormal(dc, da, sd, &map_rng);
    } while (internal::MatrixRank(out.weight) < da);
  }
  if (internal::MatrixRank(out.weight) < da)
    FailValidation("GenerateParallel: weight override is rank deficient");
  if (o.bias) {
    if (o.bias->rows() != 1 || o.bias->cols() != dc)
      FailValidation("GenerateParallel: bias override is ", o.bias->ShapeString());
    out.bias = *o.bias;
  } else {
    out.bias = Tensor::RandomNormal(1, dc, 0.1, &map_rng);
  }

  const double frame_rate = 1000.0 / o.frame_period_ms;
  for (std::size_t u = 0; u < o.num_utterances; ++u) {
    Rng rng(seed, u + 1);
    Tensor art = Tensor::Matrix(o.num_frames, da);
    for (std::size_t j = 0; j < da; ++j) {
      for (int k = 0; k < 3; ++k) {
        const double f = rng.Uniform(o.min_frequency_hz, o.max_frequency_hz);
        const double omega = 2.0 * std::numbers::pi * f / frame_rate;
        const double phase = rng.Uniform(0.0, 2.0 * std::numbers::pi);
        for (std::size_t t = 0; t < o.num_frames; ++t)
          art(t, j) += o.amplitude / 3.0 * std::sin(omega * static_cast<double>(t) + phase);
      }
    }
    Tensor ac = Tensor::Matrix(o.num_frames, dc);
    for (std::size_t t = 0; t < o.num_frames; ++t) {
      for (std::size_t i = 0; i < dc; ++i) {
        double z = out.bias[i];
        for (std::size_t j = 0; j < da; ++j) z += out.weight(i, j) * art(t, j);
        ac(t, i) = std::tanh(z) + (o.noise > 0.0 ? o.noise * rng.Normal() : 0.0);
      }
    }
    out.pairs.push_back({"pair" + std::to_string(u),
                         FeatureSequence(std::move(ac), o.frame_period_ms, FeatureKind::kFbk),
                         FeatureSequence(std::move(art), o.frame_period_ms, FeatureKind::kUti)});
  }
  return out;
}

}  // namespace asrfuse

#endif  // ASRFUSE_A2A_SYNTHETIC_HPP_
