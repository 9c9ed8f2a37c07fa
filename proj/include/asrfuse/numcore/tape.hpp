// asrfuse/numcore/tape.hpp

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

#ifndef ASRFUSE_NUMCORE_TAPE_HPP_
#define ASRFUSE_NUMCORE_TAPE_HPP_

#include <deque>
#include <functional>
#include <string_view>
#include <utility>
#include <vector>

#include "asrfuse/numcore/tensor.hpp"

namespace asrfuse {

class Tape;

/// Handle to a node recorded on a Tape.  Cheap to copy; only valid while the
/// tape is alive.
struct Var {
  Tape *tape = nullptr;
  std::size_t id = 0;

  const Tensor &value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Append-only record of one forward pass.  Reverse replay in Backward()
/// accumulates gradients into every node that depends on a parameter leaf.
/// Two tapes never share gradient state.
class Tape {
 public:
  /// Propagates the output gradient of a node to its parents.
  using BackwardFn = std::function<void(Tape &, const Tensor &)>;

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  Var Constant(Tensor value) { return Push("constant", std::move(value), false, {}); }

  Var Parameter(Tensor value) { return Push("parameter", std::move(value), true, {}); }

  /// Records the result of a primitive.  The node requires a gradient iff any
  /// parent does; `backward` is only kept in that case.
  Var Record(std::string_view op, Tensor value, std::initializer_list<Var> parents,
             BackwardFn backward) {
    bool needs = false;
    for (const Var &p : parents) {
      CheckOwner(p, op);
      needs = needs || nodes_[p.id].requires_grad;
    }
    return Push(op, std::move(value), needs, needs ? std::move(backward) : nullptr);
  }

  Var Record(std::string_view op, Tensor value, const std::vector<Var> &parents,
             BackwardFn backward) {
    bool needs = false;
    for (const Var &p : parents) {
      CheckOwner(p, op);
      needs = needs || nodes_[p.id].requires_grad;
    }
    return Push(op, std::move(value), needs, needs ? std::move(backward) : nullptr);
  }

  const Tensor &Value(Var v) const { return nodes_.at(v.id).value; }
  const Tensor &Value(std::size_t id) const { return nodes_.at(id).value; }
  bool RequiresGrad(Var v) const { return nodes_.at(v.id).requires_grad; }
  std::string_view Op(Var v) const { return nodes_.at(v.id).op; }
  std::size_t size() const { return nodes_.size(); }

  /// Gradient buffer of node `id`, allocated on first use; nullptr when the
  /// node does not take part in differentiation.
  Tensor *GradOf(std::size_t id) {
    Node &n = nodes_[id];
    if (!n.requires_grad) return nullptr;
    if (!n.has_grad) {
      n.grad = Tensor(n.value.shape(), 0.0);
      n.has_grad = true;
    }
    return &n.grad;
  }
  Tensor *GradOf(Var v) { return GradOf(v.id); }

  /// Seeds d(loss)/d(loss) = 1 and replays the tape in reverse.
  void Backward(Var loss) {
    CheckOwner(loss, "Backward");
    const Tensor &lv = nodes_[loss.id].value;
    if (lv.size() != 1)
      FailValidation("Backward: loss must be scalar, got ", lv.ShapeString());
    if (!std::isfinite(lv[0])) FailNumerical("Backward: non-finite loss ", lv[0]);
    for (Node &n : nodes_) {
      n.has_grad = false;
      n.grad = Tensor();
    }
    if (!nodes_[loss.id].requires_grad) return;
    GradOf(loss.id)->data()[0] = 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node &n = nodes_[i];
      if (!n.requires_grad || !n.has_grad || !n.backward) continue;
      n.backward(*this, n.grad);
    }
  }

  /// Gradient after Backward(); zeros when the node received none.
  Tensor Grad(Var v) const {
    const Node &n = nodes_.at(v.id);
    if (n.has_grad) return n.grad;
    return Tensor(n.value.shape(), 0.0);
  }

 private:
  struct Node {
    std::string_view op;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  Var Push(std::string_view op, Tensor value, bool requires_grad, BackwardFn fn) {
    nodes_.push_back(Node{op, std::move(value), Tensor(), requires_grad, false, std::move(fn)});
    return Var{this, nodes_.size() - 1};
  }

  void CheckOwner(Var v, std::string_view op) const {
    if (v.tape != this || v.id >= nodes_.size())
      FailValidation(op, ": variable does not belong to this tape");
  }

  // deque keeps references to earlier values stable while recording.
  std::deque<Node> nodes_;
};

inline const Tensor &Var::value() const { return tape->Value(*this); }

}  // namespace asrfuse

#endif  // ASRFUSE_NUMCORE_TAPE_HPP_
