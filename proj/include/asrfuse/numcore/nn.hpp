// asrfuse/numcore/nn.hpp

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

#ifndef ASRFUSE_NUMCORE_NN_HPP_
#define ASRFUSE_NUMCORE_NN_HPP_

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "asrfuse/numcore/ops.hpp"

namespace asrfuse {

/// Ordered, named collection of parameter tensors.  Declaration order is the
/// serialization order.  Non-trainable entries (e.g. k-means centroids) are
/// stored alongside but never updated by an optimizer.
class ParameterSet {
 public:
  std::size_t Add(std::string name, Tensor init, bool trainable = true) {
    for (const auto &n : names_)
      if (n == name) FailValidation("ParameterSet: duplicate parameter '", name, "'");
    names_.push_back(std::move(name));
    values_.push_back(std::move(init));
    trainable_.push_back(trainable);
    return values_.size() - 1;
  }

  std::size_t size() const { return values_.size(); }
  const std::string &name(std::size_t i) const { return names_.at(i); }
  bool trainable(std::size_t i) const { return trainable_.at(i); }
  Tensor &value(std::size_t i) { return values_.at(i); }
  const Tensor &value(std::size_t i) const { return values_.at(i); }

  std::size_t Find(const std::string &name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    FailValidation("ParameterSet: no parameter named '", name, "'");
  }

  bool SameLayout(const ParameterSet &o) const {
    if (size() != o.size()) return false;
    for (std::size_t i = 0; i < size(); ++i)
      if (names_[i] != o.names_[i] || !values_[i].SameShape(o.values_[i])) return false;
    return true;
  }

  std::size_t NumScalars() const {
    std::size_t n = 0;
    for (const auto &v : values_) n += v.size();
    return n;
  }

  friend bool operator==(const ParameterSet &a, const ParameterSet &b) {
    return a.names_ == b.names_ && a.values_ == b.values_ && a.trainable_ == b.trainable_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::vector<bool> trainable_;
};

/// One forward pass: a fresh tape with every parameter bound as a leaf.
/// `training` switches dropout on; `rng` feeds every stochastic primitive.
class Graph {
 public:
  /// With `differentiable` false every parameter is bound as a constant
  /// (inference, frozen teachers).
  Graph(const ParameterSet &params, bool training, Rng *rng = nullptr,
        bool differentiable = true)
      : training_(training), rng_(rng) {
    bound_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      bound_.push_back(differentiable && params.trainable(i)
                           ? tape_.Parameter(params.value(i))
                           : tape_.Constant(params.value(i)));
    }
  }

  Tape &tape() { return tape_; }
  bool training() const { return training_; }
  Rng *rng() { return rng_; }

  Var param(std::size_t i) const { return bound_.at(i); }
  Var Constant(Tensor t) { return tape_.Constant(std::move(t)); }

  Var MaybeDropout(Var x, double rate) {
    if (!training_ || rate == 0.0) return x;
    if (!rng_) FailValidation("Graph: dropout in training mode needs an rng");
    return Dropout(x, rate, rng_);
  }

  void Backward(Var loss) { tape_.Backward(loss); }

  /// Gradients for every parameter in declaration order (zeros for
  /// non-trainable entries).
  std::vector<Tensor> ParameterGrads() const {
    std::vector<Tensor> g;
    g.reserve(bound_.size());
    for (const Var &v : bound_) g.push_back(tape_.Grad(v));
    return g;
  }

 private:
  Tape tape_;
  std::vector<Var> bound_;
  bool training_;
  Rng *rng_;
};

/// y = x W + b with W: in x out.
struct Linear {
  std::size_t weight = 0;
  std::size_t bias = 0;

  static Linear Create(ParameterSet *ps, const std::string &name, std::size_t in,
                       std::size_t out, Rng *rng) {
    // Glorot-uniform initialization.
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Linear l;
    l.weight = ps->Add(name + ".weight", Tensor::RandomUniform(in, out, -limit, limit, rng));
    l.bias = ps->Add(name + ".bias", Tensor::Matrix(1, out));
    return l;
  }

  Var operator()(Graph &g, Var x) const {
    return AddRow(MatMul(x, g.param(weight)), g.param(bias));
  }
};

/// Row-wise layer normalization with learned gain and bias.
struct LayerNorm {
  std::size_t gain = 0;
  std::size_t bias = 0;

  static LayerNorm Create(ParameterSet *ps, const std::string &name, std::size_t dim) {
    LayerNorm ln;
    ln.gain = ps->Add(name + ".gain", Tensor::Matrix(1, dim, 1.0));
    ln.bias = ps->Add(name + ".bias", Tensor::Matrix(1, dim));
    return ln;
  }

  Var operator()(Graph &g, Var x) const {
    return AddRow(MulRow(NormalizeRows(x), g.param(gain)), g.param(bias));
  }
};

}  // namespace asrfuse

#endif  // ASRFUSE_NUMCORE_NN_HPP_
