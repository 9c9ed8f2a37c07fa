// asrfuse/numcore/optimizer.hpp

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

#ifndef ASRFUSE_NUMCORE_OPTIMIZER_HPP_
#define ASRFUSE_NUMCORE_OPTIMIZER_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "asrfuse/numcore/nn.hpp"

namespace asrfuse {

enum class OptimizerKind { kSgd, kAdam };
enum class LrSchedule { kConstant, kLinearDecay };

inline OptimizerKind ParseOptimizerKind(const std::string &s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  FailValidation("unknown optimizer '", s, "' (expected sgd|adam)");
}

inline LrSchedule ParseLrSchedule(const std::string &s) {
  if (s == "constant") return LrSchedule::kConstant;
  if (s == "linear") return LrSchedule::kLinearDecay;
  FailValidation("unknown lr schedule '", s, "' (expected constant|linear)");
}

struct OptimizerOptions {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  LrSchedule schedule = LrSchedule::kConstant;
  // Linear decay reaches zero after this many steps.
  std::size_t total_steps = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// SGD or Adam over a ParameterSet.  Moment buffers are allocated lazily with
/// the parameter shapes and can be saved/restored for checkpoint resume.
class Optimizer {
 public:
  explicit Optimizer(OptimizerOptions opts) : opts_(opts) {
    if (opts_.learning_rate < 0.0)
      FailValidation("Optimizer: learning rate must be >= 0, got ", opts_.learning_rate);
    if (opts_.schedule == LrSchedule::kLinearDecay && opts_.total_steps == 0)
      FailValidation("Optimizer: linear decay needs total_steps > 0");
  }

  const OptimizerOptions &options() const { return opts_; }
  std::size_t step() const { return step_; }

  /// Learning rate used by the next Step().
  double CurrentLearningRate() const {
    if (opts_.schedule == LrSchedule::kConstant) return opts_.learning_rate;
    const double frac =
        1.0 - static_cast<double>(step_) / static_cast<double>(opts_.total_steps);
    return opts_.learning_rate * std::max(0.0, frac);
  }

  void Step(ParameterSet *params, const std::vector<Tensor> &grads) {
    if (grads.size() != params->size())
      FailValidation("Optimizer::Step: ", grads.size(), " gradients for ", params->size(),
                     " parameters");
    for (std::size_t i = 0; i < grads.size(); ++i) {
      if (!params->trainable(i)) continue;
      if (!grads[i].SameShape(params->value(i)))
        FailValidation("Optimizer::Step: gradient shape ", grads[i].ShapeString(),
                       " for parameter '", params->name(i), "' of shape ",
                       params->value(i).ShapeString());
      if (!grads[i].AllFinite())
        FailNumerical("Optimizer::Step: non-finite gradient for '", params->name(i), "'");
    }
    const double lr = CurrentLearningRate();
    ++step_;
    if (opts_.kind == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!params->trainable(i)) continue;
        auto &p = params->value(i).data();
        for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * grads[i][k];
      }
      return;
    }
    if (m_.empty()) {
      for (std::size_t i = 0; i < params->size(); ++i) {
        m_.emplace_back(params->value(i).shape(), 0.0);
        v_.emplace_back(params->value(i).shape(), 0.0);
      }
    }
    const double t = static_cast<double>(step_);
    const double bc1 = 1.0 - std::pow(opts_.beta1, t);
    const double bc2 = 1.0 - std::pow(opts_.beta2, t);
    for (std::size_t i = 0; i < grads.size(); ++i) {
      if (!params->trainable(i)) continue;
      auto &p = params->value(i).data();
      auto &m = m_[i].data();
      auto &v = v_[i].data();
      for (std::size_t k = 0; k < p.size(); ++k) {
        const double g = grads[i][k];
        m[k] = opts_.beta1 * m[k] + (1.0 - opts_.beta1) * g;
        v[k] = opts_.beta2 * v[k] + (1.0 - opts_.beta2) * g * g;
        const double mhat = m[k] / bc1;
        const double vhat = v[k] / bc2;
        p[k] -= lr * mhat / (std::sqrt(vhat) + opts_.epsilon);
      }
    }
  }

  // Checkpoint access.
  const std::vector<Tensor> &first_moments() const { return m_; }
  const std::vector<Tensor> &second_moments() const { return v_; }
  void Restore(std::size_t step, std::vector<Tensor> m, std::vector<Tensor> v) {
    step_ = step;
    m_ = std::move(m);
    v_ = std::move(v);
  }

 private:
  OptimizerOptions opts_;
  std::size_t step_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace asrfuse

#endif  // ASRFUSE_NUMCORE_OPTIMIZER_HPP_
