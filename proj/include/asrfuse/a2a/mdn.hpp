// asrfuse/a2a/mdn.hpp

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

// Mixture density network for acoustic-to-articulatory inversion and its
// multi-task criterion: MDN negative log-likelihood, MSE of the mixture mean,
// and (negated) Pearson correlation of the mixture mean.

#ifndef ASRFUSE_A2A_MDN_HPP_
#define ASRFUSE_A2A_MDN_HPP_

#include <cmath>
#include <numbers>
#include <vector>

#include "asrfuse/bottleneck/feature_sequence.hpp"
#include "asrfuse/numcore/log.hpp"
#include "asrfuse/numcore/nn.hpp"

namespace asrfuse {

/// Raw per-frame MDN outputs for T frames, M components, D dims.
struct MdnOutputs {
  Var mixture_logits;  // T x M, fed to a softmax
  Var means;           // T x (M D), component m in columns [mD, (m+1)D)
  Var log_sigmas;      // T x (M D), sigma = exp(.) before flooring

  std::size_t num_mixtures() const { return mixture_logits.cols(); }
  std::size_t dim() const { return means.cols() / num_mixtures(); }
};

constexpr double kDefaultSigmaFloor = 1e-3;

struct MtlWeights {
  double mdn = 1.0;
  double mse = 1.0;
  double pearson = 1.0;

  void Validate() const {
    if (mdn < 0.0 || mse < 0.0 || pearson < 0.0)
      FailValidation("MtlWeights: weights must be non-negative");
    if (mdn == 0.0 && mse == 0.0 && pearson == 0.0)
      FailValidation("MtlWeights: all weights are zero");
  }
};

namespace internal {

inline void CheckMdnShapes(const MdnOutputs &o, const Tensor &targets) {
  const std::size_t m = o.mixture_logits.cols();
  if (m == 0) FailValidation("MdnLoss: need at least one mixture component");
  const std::size_t t = o.mixture_logits.rows();
  if (t == 0) FailValidation("MdnLoss: no frames");
  if (o.means.rows() != t || o.log_sigmas.rows() != t || o.means.cols() % m != 0 ||
      o.log_sigmas.cols() != o.means.cols())
    FailValidation("MdnLoss: inconsistent head output shapes");
  if (targets.rows() != t || targets.cols() != o.means.cols() / m)
    FailValidation("MdnLoss: targets ", targets.ShapeString(), " vs ", t, " frames of dim ",
                   o.means.cols() / m);
  if (!targets.AllFinite()) FailValidation("MdnLoss: non-finite target");
}

}  // namespace internal

/// -sum_t ln sum_m softmax_m(logits_t) N(a_t; mu_tm, diag sigma_tm^2),
/// entirely in the log domain.  sigma = max(exp(log_sigma), sigma_floor).
inline Var MdnLoss(const MdnOutputs &o, const Tensor &targets,
                   double sigma_floor = kDefaultSigmaFloor) {
  internal::CheckMdnShapes(o, targets);
  Tape &tp = *o.means.tape;
  const std::size_t m = o.num_mixtures(), d = o.dim();
  Var a = tp.Constant(targets);
  Var log_sigma = ClampMin(o.log_sigmas, std::log(sigma_floor));
  const double log_norm = 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
  std::vector<Var> comps;
  for (std::size_t k = 0; k < m; ++k) {
    Var ls = SliceCols(log_sigma, k * d, d);
    Var z = Mul(Sub(a, SliceCols(o.means, k * d, d)), Exp(Neg(ls)));
    Var ll = Sub(Scale(SumCols(Square(z)), -0.5), SumCols(ls));
    comps.push_back(AddScalar(ll, -log_norm));
  }
  Var joint = Add(ConcatCols(comps), LogSoftmaxRows(o.mixture_logits));
  return Neg(SumAll(LogSumExpRows(joint)));
}

/// Mixture-weighted mean sum_m softmax_m(logits) mu_m, T x D.
inline Var MixtureMean(const MdnOutputs &o) {
  const std::size_t m = o.num_mixtures(), d = o.dim();
  Var w = SoftmaxRows(o.mixture_logits);
  Var mean{};
  for (std::size_t k = 0; k < m; ++k) {
    Var term = Mul(BroadcastCols(SliceCols(w, k, 1), d), SliceCols(o.means, k * d, d));
    mean = k == 0 ? term : Add(mean, term);
  }
  return mean;
}

/// Mean over frames and dimensions of the squared error.
inline Var MseLoss(Var predicted, const Tensor &targets) {
  if (!predicted.value().SameShape(targets))
    FailValidation("MseLoss: shape mismatch ", predicted.value().ShapeString(), " vs ",
                   targets.ShapeString());
  return MeanAll(Square(Sub(predicted, predicted.tape->Constant(targets))));
}

/// Pearson correlation over time per dimension, averaged over dimensions.
/// A dimension with (numerically) zero temporal variance in either stream
/// contributes 0 and triggers a warning.
inline Var PearsonCorrelation(Var predicted, const Tensor &targets,
                              std::vector<std::size_t> *degenerate_dims = nullptr) {
  const Tensor &yv = predicted.value();
  if (!yv.SameShape(targets))
    FailValidation("PearsonCorrelation: shape mismatch ", yv.ShapeString(), " vs ",
                   targets.ShapeString());
  const std::size_t t = yv.rows(), d = yv.cols();
  if (t < 2) FailValidation("PearsonCorrelation: need at least two frames, got ", t);
  Tape &tp = *predicted.tape;

  Tensor ac = targets;
  Tensor va = Tensor::Matrix(1, d);
  std::vector<char> ok(d, 1);
  for (std::size_t j = 0; j < d; ++j) {
    double ma = 0.0, my = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
      ma += targets(i, j);
      my += yv(i, j);
    }
    ma /= static_cast<double>(t);
    my /= static_cast<double>(t);
    double sa = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
      ac(i, j) = targets(i, j) - ma;
      sa += ac(i, j) * ac(i, j);
      sy += (yv(i, j) - my) * (yv(i, j) - my);
    }
    va[j] = sa;
    const double tiny = 1e-24 * static_cast<double>(t);
    if (sa <= tiny * (1.0 + ma * ma) || sy <= tiny * (1.0 + my * my)) ok[j] = 0;
  }
  Tensor mask = Tensor::Matrix(1, d), pad = Tensor::Matrix(1, d);
  std::vector<std::size_t> bad;
  for (std::size_t j = 0; j < d; ++j) {
    mask[j] = ok[j] ? 1.0 : 0.0;
    pad[j] = ok[j] ? 0.0 : 1.0;
    if (!ok[j]) bad.push_back(j);
  }
  if (!bad.empty())
    Warn("PearsonCorrelation: ", bad.size(), " of ", d,
         " dimension(s) have zero temporal variance and contribute 0");
  if (degenerate_dims) *degenerate_dims = bad;

  Var yc = Sub(predicted, BroadcastRows(MeanRows(predicted), t));
  Var cov = SumRows(Mul(yc, tp.Constant(std::move(ac))));
  Var vy = SumRows(Square(yc));
  // Guarded dimensions see a unit denominator and a zero mask.
  Var den = Sqrt(Add(Mul(vy, tp.Constant(std::move(va))), tp.Constant(std::move(pad))));
  Var rho = Mul(Div(cov, den), tp.Constant(std::move(mask)));
  return MeanAll(rho);
}

struct MtlTerms {
  Var total;
  double mdn = 0.0;
  double mse = 0.0;
  double pearson = 0.0;
};

/// w.mdn * L_mdn + w.mse * L_mse - w.pearson * rho, with the MSE and Pearson
/// terms evaluated on the mixture mean.
inline MtlTerms MtlLoss(const MdnOutputs &o, const Tensor &targets, const MtlWeights &w,
                        double sigma_floor = kDefaultSigmaFloor) {
  w.Validate();
  Var mdn = MdnLoss(o, targets, sigma_floor);
  Var mean = MixtureMean(o);
  Var mse = MseLoss(mean, targets);
  Var rho = PearsonCorrelation(mean, targets);
  Var total = Sub(Add(Scale(mdn, w.mdn), Scale(mse, w.mse)), Scale(rho, w.pearson));
  return {total, mdn.value().item(), mse.value().item(), rho.value().item()};
}

struct MdnNetworkConfig {
  std::size_t input_dim = 8;
  std::size_t output_dim = 4;
  std::size_t num_mixtures = 3;
  std::vector<std::size_t> hidden{64, 64};
  double sigma_floor = kDefaultSigmaFloor;

  void Validate() const {
    if (input_dim == 0 || output_dim == 0) FailValidation("MdnNetwork: dims must be positive");
    if (num_mixtures == 0) FailValidation("MdnNetwork: need at least one mixture component");
    if (!(sigma_floor > 0.0)) FailValidation("MdnNetwork: sigma floor must be positive");
  }
};

/// Tanh MLP emitting mixture logits, means and log standard deviations.
class MdnNetwork {
 public:
  MdnNetwork(const MdnNetworkConfig &config, std::uint64_t seed) : config_(config) {
    config_.Validate();
    Rng rng(seed);
    std::size_t in = config_.input_dim;
    for (std::size_t i = 0; i < config_.hidden.size(); ++i) {
      layers_.push_back(
          Linear::Create(&params_, "hidden" + std::to_string(i), in, config_.hidden[i], &rng));
      in = config_.hidden[i];
    }
    const std::size_t md = config_.num_mixtures * config_.output_dim;
    output_ = Linear::Create(&params_, "output", in, config_.num_mixtures + 2 * md, &rng);
  }

  const MdnNetworkConfig &config() const { return config_; }
  ParameterSet &params() { return params_; }
  const ParameterSet &params() const { return params_; }

  MdnOutputs Forward(Graph &g, Var x) const {
    if (x.cols() != config_.input_dim)
      FailValidation("MdnNetwork: input dim ", x.cols(), ", expected ", config_.input_dim);
    Var h = x;
    for (const Linear &l : layers_) h = Tanh(l(g, h));
    Var out = output_(g, h);
    const std::size_t m = config_.num_mixtures, md = m * config_.output_dim;
    return {SliceCols(out, 0, m), SliceCols(out, m, md), SliceCols(out, m + md, md)};
  }

  /// Per-frame mixture mean, labelled as articulatory (UTI) features.
  FeatureSequence Invert(const FeatureSequence &acoustic) const {
    if (acoustic.dim() != config_.input_dim)
      FailValidation("MdnNetwork::Invert: acoustic dim ", acoustic.dim(), ", expected ",
                     config_.input_dim);
    Graph g(params_, false, nullptr, false);
    Var mean = MixtureMean(Forward(g, g.Constant(acoustic.frames)));
    return FeatureSequence(mean.value(), acoustic.frame_period_ms, FeatureKind::kUti);
  }

 private:
  MdnNetworkConfig config_;
  ParameterSet params_;
  std::vector<Linear> layers_;
  Linear output_;
};

}  // namespace asrfuse

#endif  // ASRFUSE_A2A_MDN_HPP_
