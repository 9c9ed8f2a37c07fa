// asrfuse/ssl/quantizers.hpp

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

// The two quantizer families: Gumbel-softmax codebooks for contrastive
// pre-training and k-means codebooks producing masked-prediction pseudo-labels.

#ifndef ASRFUSE_SSL_QUANTIZERS_HPP_
#define ASRFUSE_SSL_QUANTIZERS_HPP_

#include <limits>
#include <vector>

#include "asrfuse/numcore/ops.hpp"

namespace asrfuse {

struct GumbelSelection {
  Var hard;  // one-hot per row (straight-through)
  Var soft;  // softmax((logits + noise) / temperature)
};

inline Tensor SampleGumbelNoise(std::size_t rows, std::size_t cols, Rng *rng) {
  Tensor n = Tensor::Matrix(rows, cols);
  for (double &v : n.data()) v = rng->Gumbel();
  return n;
}

/// Gumbel-softmax selection over the columns of each row of `logits` (one
/// row per codebook, or per frame and codebook).  The forward value is the
/// hard one-hot choice; gradients flow through the soft relaxation.
inline GumbelSelection GumbelSelect(Var logits, double temperature, const Tensor &noise) {
  if (!(temperature > 0.0))
    FailValidation("GumbelSelect: temperature must be positive, got ", temperature);
  if (!logits.value().AllFinite()) FailValidation("GumbelSelect: non-finite logits");
  if (!noise.SameShape(logits.value()))
    FailValidation("GumbelSelect: noise shape ", noise.ShapeString(), " vs logits ",
                   logits.value().ShapeString());
  Var perturbed = Add(logits, logits.tape->Constant(noise));
  Var soft = SoftmaxRows(Scale(perturbed, 1.0 / temperature));
  return {StraightThrough(soft), soft};
}

inline GumbelSelection GumbelSelect(Var logits, double temperature, Rng *rng) {
  return GumbelSelect(logits, temperature,
                      SampleGumbelNoise(logits.rows(), logits.cols(), rng));
}

struct KMeansResult {
  Tensor centroids;                  // k x D
  std::vector<std::size_t> assignments;
  std::vector<double> inertia;       // after each assignment step
};

namespace internal {

inline double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline std::size_t Nearest(const Tensor &centroids, std::span<const double> x, double *dist) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = SquaredDistance(centroids.Row(c), x);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

}  // namespace internal

/// Lloyd's algorithm with k-means++ seeding.  Empty clusters keep their
/// previous centroid, so the recorded inertia never increases.
inline KMeansResult KMeansFit(const Tensor &frames, std::size_t k, std::size_t iterations,
                              std::uint64_t seed) {
  if (frames.rows() == 0) FailValidation("KMeansFit: empty input");
  if (k == 0) FailValidation("KMeansFit: k must be positive");
  if (frames.rows() < k)
    FailValidation("KMeansFit: ", frames.rows(), " frames cannot form ", k, " clusters");
  if (!frames.AllFinite()) FailValidation("KMeansFit: non-finite input");
  const std::size_t n = frames.rows(), d = frames.cols();
  Rng rng(seed);

  KMeansResult r;
  r.centroids = Tensor::Matrix(k, d);
  std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
  std::size_t first = rng.Index(n);
  std::copy(frames.Row(first).begin(), frames.Row(first).end(), r.centroids.Row(0).begin());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      min_d[i] = std::min(min_d[i],
                          internal::SquaredDistance(frames.Row(i), r.centroids.Row(c - 1)));
      total += min_d[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double u = rng.Uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        u -= min_d[i];
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.Index(n);
    }
    std::copy(frames.Row(pick).begin(), frames.Row(pick).end(), r.centroids.Row(c).begin());
  }

  r.assignments.assign(n, 0);
  for (std::size_t it = 0; it <= iterations; ++it) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double dist = 0.0;
      r.assignments[i] = internal::Nearest(r.centroids, frames.Row(i), &dist);
      inertia += dist;
    }
    r.inertia.push_back(inertia);
    if (it == iterations) break;
    Tensor sums = Tensor::Matrix(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = r.assignments[i];
      ++counts[c];
      for (std::size_t j = 0; j < d; ++j) sums(c, j) += frames(i, j);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < d; ++j)
        r.centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }
  }
  return r;
}

/// G independent k-means codebooks over the same frames.
class KMeansQuantizer {
 public:
  KMeansQuantizer() = default;
  explicit KMeansQuantizer(std::vector<Tensor> centroids) : centroids_(std::move(centroids)) {}

  static KMeansQuantizer Fit(const Tensor &frames, const std::vector<std::size_t> &sizes,
                             std::size_t iterations, std::uint64_t seed) {
    std::vector<Tensor> cents;
    for (std::size_t g = 0; g < sizes.size(); ++g)
      cents.push_back(KMeansFit(frames, sizes[g], iterations, seed + 7919 * g).centroids);
    return KMeansQuantizer(std::move(cents));
  }

  std::size_t num_codebooks() const { return centroids_.size(); }
  std::size_t codebook_size(std::size_t g) const { return centroids_.at(g).rows(); }
  const std::vector<Tensor> &centroids() const { return centroids_; }

  /// labels[g][t]: nearest centroid of frame t in codebook g.
  std::vector<std::vector<std::size_t>> Assign(const Tensor &frames) const {
    std::vector<std::vector<std::size_t>> labels(centroids_.size());
    for (std::size_t g = 0; g < centroids_.size(); ++g) {
      if (frames.cols() != centroids_[g].cols())
        FailValidation("KMeansQuantizer: frame dim ", frames.cols(), " vs codebook dim ",
                       centroids_[g].cols());
      labels[g].resize(frames.rows());
      for (std::size_t t = 0; t < frames.rows(); ++t)
        labels[g][t] = internal::Nearest(centroids_[g], frames.Row(t), nullptr);
    }
    return labels;
  }

 private:
  std::vector<Tensor> centroids_;
};

}  // namespace asrfuse

#endif  // ASRFUSE_SSL_QUANTIZERS_HPP_
