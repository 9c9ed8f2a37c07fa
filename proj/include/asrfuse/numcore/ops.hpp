// asrfuse/numcore/ops.hpp

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

// Differentiable primitives on rank-2 tensors.  Each primitive computes its
// value eagerly and records a closure that maps the output gradient to the
// gradients of its inputs.

#ifndef ASRFUSE_NUMCORE_OPS_HPP_
#define ASRFUSE_NUMCORE_OPS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "asrfuse/numcore/tape.hpp"

namespace asrfuse {

namespace internal {

inline void RequireMatrix(const Tensor &t, const char *op) {
  if (t.rank() != 2) FailValidation(op, ": expected a matrix, got ", t.ShapeString());
}

inline void RequireSameShape(const Tensor &a, const Tensor &b, const char *op) {
  if (!a.SameShape(b))
    FailValidation(op, ": shape mismatch ", a.ShapeString(), " vs ", b.ShapeString());
}

inline Tape &TapeOf(Var a, Var b, const char *op) {
  if (a.tape != b.tape) FailValidation(op, ": operands live on different tapes");
  return *a.tape;
}

inline void AddInto(Tensor *dst, const Tensor &src) {
  if (dst) *dst += src;
}

// Elementwise unary op with derivative expressed through input x and output y.
template <typename F, typename D>
Var Unary(Var x, const char *op, F f, D dfdx) {
  Tape &t = *x.tape;
  const Tensor &xv = x.value();
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = f(xv[i]);
  const std::size_t xid = x.id;
  return t.Record(op, std::move(y), {x}, [xid, dfdx](Tape &tp, const Tensor &g) {
    Tensor *gx = tp.GradOf(xid);
    if (!gx) return;
    const Tensor &xv = tp.Value(xid);
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * dfdx(xv[i]);
  });
}

}  // namespace internal

inline Var Add(Var a, Var b) {
  Tape &t = internal::TapeOf(a, b, "Add");
  internal::RequireSameShape(a.value(), b.value(), "Add");
  Tensor y = a.value();
  y += b.value();
  const std::size_t ai = a.id, bi = b.id;
  return t.Record("Add", std::move(y), {a, b}, [ai, bi](Tape &tp, const Tensor &g) {
    internal::AddInto(tp.GradOf(ai), g);
    internal::AddInto(tp.GradOf(bi), g);
  });
}

inline Var Sub(Var a, Var b) {
  Tape &t = internal::TapeOf(a, b, "Sub");
  internal::RequireSameShape(a.value(), b.value(), "Sub");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= b.value()[i];
  const std::size_t ai = a.id, bi = b.id;
  return t.Record("Sub", std::move(y), {a, b}, [ai, bi](Tape &tp, const Tensor &g) {
    internal::AddInto(tp.GradOf(ai), g);
    if (Tensor *gb = tp.GradOf(bi))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
  });
}

/// Elementwise (Hadamard) product.
inline Var Mul(Var a, Var b) {
  Tape &t = internal::TapeOf(a, b, "Mul");
  internal::RequireSameShape(a.value(), b.value(), "Mul");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b.value()[i];
  const std::size_t ai = a.id, bi = b.id;
  return t.Record("Mul", std::move(y), {a, b}, [ai, bi](Tape &tp, const Tensor &g) {
    const Tensor &av = tp.Value(ai), &bv = tp.Value(bi);
    if (Tensor *ga = tp.GradOf(ai))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
    if (Tensor *gb = tp.GradOf(bi))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
  });
}

inline Var Div(Var a, Var b) {
  Tape &t = internal::TapeOf(a, b, "Div");
  internal::RequireSameShape(a.value(), b.value(), "Div");
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] /= b.value()[i];
  const std::size_t ai = a.id, bi = b.id;
  return t.Record("Div", std::move(y), {a, b}, [ai, bi](Tape &tp, const Tensor &g) {
    const Tensor &av = tp.Value(ai), &bv = tp.Value(bi);
    if (Tensor *ga = tp.GradOf(ai))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] / bv[i];
    if (Tensor *gb = tp.GradOf(bi))
      for (std::size_t i = 0; i < g.size(); ++i)
        (*gb)[i] -= g[i] * av[i] / (bv[i] * bv[i]);
  });
}

inline Var Scale(Var x, double s) {
  return internal::Unary(
      x, "Scale", [s](double v) { return s * v; }, [s](double) { return s; });
}

inline Var Neg(Var x) { return Scale(x, -1.0); }

inline Var AddScalar(Var x, double s) {
  return internal::Unary(
      x, "AddScalar", [s](double v) { return v + s; }, [](double) { return 1.0; });
}

inline Var Relu(Var x) {
  return internal::Unary(
      x, "Relu", [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

inline Var Tanh(Var x) {
  return internal::Unary(
      x, "Tanh", [](double v) { return std::tanh(v); },
      [](double v) {
        const double th = std::tanh(v);
        return 1.0 - th * th;
      });
}

inline Var Exp(Var x) {
  return internal::Unary(
      x, "Exp", [](double v) { return std::exp(v); }, [](double v) { return std::exp(v); });
}

inline Var Log(Var x) {
  return internal::Unary(
      x, "Log", [](double v) { return std::log(v); }, [](double v) { return 1.0 / v; });
}

inline Var Sqrt(Var x) {
  return internal::Unary(
      x, "Sqrt", [](double v) { return std::sqrt(v); },
      [](double v) { return 0.5 / std::sqrt(v); });
}

inline Var Square(Var x) {
  return internal::Unary(
      x, "Square", [](double v) { return v * v; }, [](double v) { return 2.0 * v; });
}

/// max(x, floor); the gradient is blocked where the floor is active.
inline Var ClampMin(Var x, double floor) {
  return internal::Unary(
      x, "ClampMin", [floor](double v) { return v < floor ? floor : v; },
      [floor](double v) { return v < floor ? 0.0 : 1.0; });
}

/// Elementwise smooth-L1 (Huber-style) penalty with transition point beta:
/// 0.5 x^2 / beta for |x| <= beta, |x| - 0.5 beta otherwise.
inline Var SmoothL1(Var x, double beta) {
  if (!(beta > 0.0)) FailValidation("SmoothL1: beta must be positive, got ", beta);
  return internal::Unary(
      x, "SmoothL1",
      [beta](double v) {
        const double a = std::abs(v);
        return a <= beta ? 0.5 * v * v / beta : a - 0.5 * beta;
      },
      [beta](double v) {
        if (std::abs(v) <= beta) return v / beta;
        return v > 0.0 ? 1.0 : -1.0;
      });
}

/// Same value, no gradient.
inline Var StopGradient(Var x) { return x.tape->Constant(x.value()); }

inline Var MatMul(Var a, Var b) {
  Tape &t = internal::TapeOf(a, b, "MatMul");
  const Tensor &av = a.value(), &bv = b.value();
  internal::RequireMatrix(av, "MatMul");
  internal::RequireMatrix(bv, "MatMul");
  if (av.cols() != bv.rows())
    FailValidation("MatMul: shape mismatch ", av.ShapeString(), " x ", bv.ShapeString());
  Tensor y = MatMulPlain(av, bv);
  const std::size_t ai = a.id, bi = b.id;
  return t.Record("MatMul", std::move(y), {a, b}, [ai, bi](Tape &tp, const Tensor &g) {
    const Tensor &av = tp.Value(ai), &bv = tp.Value(bi);
    if (Tensor *ga = tp.GradOf(ai)) *ga += MatMulPlain(g, bv.Transposed());
    if (Tensor *gb = tp.GradOf(bi)) *gb += MatMulPlain(av.Transposed(), g);
  });
}

inline Var Transpose(Var x) {
  internal::RequireMatrix(x.value(), "Transpose");
  const std::size_t xi = x.id;
  return x.tape->Record("Transpose", x.value().Transposed(), {x},
                        [xi](Tape &tp, const Tensor &g) {
                          internal::AddInto(tp.GradOf(xi), g.Transposed());
                        });
}

/// Row-major reinterpretation with the same element count.
inline Var Reshape(Var x, std::size_t rows, std::size_t cols) {
  if (rows * cols != x.value().size())
    FailValidation("Reshape: cannot view ", x.value().ShapeString(), " as [", rows, "x",
                   cols, "]");
  const std::size_t xi = x.id;
  return x.tape->Record("Reshape", x.value().Reshaped({rows, cols}), {x},
                        [xi](Tape &tp, const Tensor &g) {
                          if (Tensor *gx = tp.GradOf(xi))
                            for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
                        });
}

/// x (T x D) + row (1 x D) broadcast over rows.
inline Var AddRow(Var x, Var row) {
  Tape &t = internal::TapeOf(x, row, "AddRow");
  const Tensor &xv = x.value(), &rv = row.value();
  if (rv.rows() != 1 || rv.cols() != xv.cols())
    FailValidation("AddRow: shape mismatch ", xv.ShapeString(), " + ", rv.ShapeString());
  Tensor y = xv;
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += rv[j];
  const std::size_t xi = x.id, ri = row.id;
  return t.Record("AddRow", std::move(y), {x, row}, [xi, ri](Tape &tp, const Tensor &g) {
    internal::AddInto(tp.GradOf(xi), g);
    if (Tensor *gr = tp.GradOf(ri))
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) (*gr)[j] += g(i, j);
  });
}

/// x (T x D) * row (1 x D) broadcast over rows.
inline Var MulRow(Var x, Var row) {
  Tape &t = internal::TapeOf(x, row, "MulRow");
  const Tensor &xv = x.value(), &rv = row.value();
  if (rv.rows() != 1 || rv.cols() != xv.cols())
    FailValidation("MulRow: shape mismatch ", xv.ShapeString(), " * ", rv.ShapeString());
  Tensor y = xv;
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) *= rv[j];
  const std::size_t xi = x.id, ri = row.id;
  return t.Record("MulRow", std::move(y), {x, row}, [xi, ri](Tape &tp, const Tensor &g) {
    const Tensor &xv = tp.Value(xi), &rv = tp.Value(ri);
    if (Tensor *gx = tp.GradOf(xi))
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) (*gx)(i, j) += g(i, j) * rv[j];
    if (Tensor *gr = tp.GradOf(ri))
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) (*gr)[j] += g(i, j) * xv(i, j);
  });
}

/// Repeats a 1 x D row n times.
inline Var BroadcastRows(Var row, std::size_t n) {
  const Tensor &rv = row.value();
  if (rv.rows() != 1) FailValidation("BroadcastRows: expected 1xD, got ", rv.ShapeString());
  Tensor y = Tensor::Matrix(n, rv.cols());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < rv.cols(); ++j) y(i, j) = rv[j];
  const std::size_t ri = row.id;
  return row.tape->Record("BroadcastRows", std::move(y), {row},
                          [ri](Tape &tp, const Tensor &g) {
                            if (Tensor *gr = tp.GradOf(ri))
                              for (std::size_t i = 0; i < g.rows(); ++i)
                                for (std::size_t j = 0; j < g.cols(); ++j)
                                  (*gr)[j] += g(i, j);
                          });
}

/// Repeats a T x 1 column n times.
inline Var BroadcastCols(Var col, std::size_t n) {
  const Tensor &cv = col.value();
  if (cv.rank() != 2 || cv.cols() != 1)
    FailValidation("BroadcastCols: expected Tx1, got ", cv.ShapeString());
  Tensor y = Tensor::Matrix(cv.rows(), n);
  for (std::size_t i = 0; i < cv.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) y(i, j) = cv[i];
  const std::size_t ci = col.id;
  return col.tape->Record("BroadcastCols", std::move(y), {col},
                          [ci](Tape &tp, const Tensor &g) {
                            if (Tensor *gc = tp.GradOf(ci))
                              for (std::size_t i = 0; i < g.rows(); ++i)
                                for (std::size_t j = 0; j < g.cols(); ++j)
                                  (*gc)[i] += g(i, j);
                          });
}

inline Var SumAll(Var x) {
  const std::size_t xi = x.id;
  return x.tape->Record("SumAll", Tensor::Scalar(x.value().Sum()), {x},
                        [xi](Tape &tp, const Tensor &g) {
                          if (Tensor *gx = tp.GradOf(xi))
                            for (double &v : gx->data()) v += g[0];
                        });
}

inline Var MeanAll(Var x) {
  const std::size_t n = x.value().size();
  if (n == 0) FailValidation("MeanAll: empty tensor");
  return Scale(SumAll(x), 1.0 / static_cast<double>(n));
}

/// Column sums: T x D -> 1 x D.
inline Var SumRows(Var x) {
  const Tensor &xv = x.value();
  internal::RequireMatrix(xv, "SumRows");
  Tensor y = Tensor::Matrix(1, xv.cols());
  for (std::size_t i = 0; i < xv.rows(); ++i)
    for (std::size_t j = 0; j < xv.cols(); ++j) y[j] += xv(i, j);
  const std::size_t xi = x.id;
  return x.tape->Record("SumRows", std::move(y), {x}, [xi](Tape &tp, const Tensor &g) {
    if (Tensor *gx = tp.GradOf(xi))
      for (std::size_t i = 0; i < gx->rows(); ++i)
        for (std::size_t j = 0; j < gx->cols(); ++j) (*gx)(i, j) += g[j];
  });
}

inline Var MeanRows(Var x) {
  if (x.value().rows() == 0) FailValidation("MeanRows: no rows");
  return Scale(SumRows(x), 1.0 / static_cast<double>(x.value().rows()));
}

/// Row sums: T x D -> T x 1.
inline Var SumCols(Var x) {
  const Tensor &xv = x.value();
  internal::RequireMatrix(xv, "SumCols");
  Tensor y = Tensor::Matrix(xv.rows(), 1);
  for (std::size_t i = 0; i < xv.rows(); ++i)
    for (std::size_t j = 0; j < xv.cols(); ++j) y[i] += xv(i, j);
  const std::size_t xi = x.id;
  return x.tape->Record("SumCols", std::move(y), {x}, [xi](Tape &tp, const Tensor &g) {
    if (Tensor *gx = tp.GradOf(xi))
      for (std::size_t i = 0; i < gx->rows(); ++i)
        for (std::size_t j = 0; j < gx->cols(); ++j) (*gx)(i, j) += g[i];
  });
}

inline Var MeanCols(Var x) {
  if (x.value().cols() == 0) FailValidation("MeanCols: no columns");
  return Scale(SumCols(x), 1.0 / static_cast<double>(x.value().cols()));
}

namespace internal {

inline double RowLogSumExp(std::span<const double> row) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : row) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : row) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace internal

/// Per-row log-sum-exp: T x V -> T x 1.
inline Var LogSumExpRows(Var x) {
  const Tensor &xv = x.value();
  internal::RequireMatrix(xv, "LogSumExpRows");
  Tensor y = Tensor::Matrix(xv.rows(), 1);
  for (std::size_t i = 0; i < xv.rows(); ++i) y[i] = internal::RowLogSumExp(xv.Row(i));
  const std::size_t xi = x.id;
  const std::size_t yi = x.tape->size();
  return x.tape->Record("LogSumExpRows", std::move(y), {x},
                        [xi, yi](Tape &tp, const Tensor &g) {
                          Tensor *gx = tp.GradOf(xi);
                          if (!gx) return;
                          const Tensor &xv = tp.Value(xi), &yv = tp.Value(yi);
                          for (std::size_t i = 0; i < xv.rows(); ++i)
                            for (std::size_t j = 0; j < xv.cols(); ++j)
                              (*gx)(i, j) += g[i] * std::exp(xv(i, j) - yv[i]);
                        });
}

inline Var LogSoftmaxRows(Var x) {
  const Tensor &xv = x.value();
  internal::RequireMatrix(xv, "LogSoftmaxRows");
  Tensor y = xv;
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    const double lse = internal::RowLogSumExp(xv.Row(i));
    for (double &v : y.Row(i)) v -= lse;
  }
  const std::size_t xi = x.id;
  const std::size_t yi = x.tape->size();
  return x.tape->Record("LogSoftmaxRows", std::move(y), {x},
                        [xi, yi](Tape &tp, const Tensor &g) {
                          Tensor *gx = tp.GradOf(xi);
                          if (!gx) return;
                          const Tensor &yv = tp.Value(yi);
                          for (std::size_t i = 0; i < yv.rows(); ++i) {
                            double gs = 0.0;
                            for (std::size_t j = 0; j < yv.cols(); ++j) gs += g(i, j);
                            for (std::size_t j = 0; j < yv.cols(); ++j)
                              (*gx)(i, j) += g(i, j) - std::exp(yv(i, j)) * gs;
                          }
                        });
}

inline Var SoftmaxRows(Var x) {
  const Tensor &xv = x.value();
  internal::RequireMatrix(xv, "SoftmaxRows");
  Tensor y = xv;
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    const double lse = internal::RowLogSumExp(xv.Row(i));
    for (double &v : y.Row(i)) v = std::exp(v - lse);
  }
  const std::size_t xi = x.id;
  const std::size_t yi = x.tape->size();
  return x.tape->Record("SoftmaxRows", std::move(y), {x},
                        [xi, yi](Tape &tp, const Tensor &g) {
                          Tensor *gx = tp.GradOf(xi);
                          if (!gx) return;
                          const Tensor &yv = tp.Value(yi);
                          for (std::size_t i = 0; i < yv.rows(); ++i) {
                            double dot = 0.0;
                            for (std::size_t j = 0; j < yv.cols(); ++j)
                              dot += g(i, j) * yv(i, j);
                            for (std::size_t j = 0; j < yv.cols(); ++j)
                              (*gx)(i, j) += yv(i, j) * (g(i, j) - dot);
                          }
                        });
}

inline Var ConcatCols(const std::vector<Var> &parts) {
  if (parts.empty()) FailValidation("ConcatCols: no inputs");
  const std::size_t rows = parts[0].value().rows();
  std::size_t cols = 0;
  for (const Var &p : parts) {
    if (p.tape != parts[0].tape) FailValidation("ConcatCols: operands on different tapes");
    if (p.value().rows() != rows)
      FailValidation("ConcatCols: row mismatch ", p.value().ShapeString(), " vs ", rows);
    cols += p.value().cols();
  }
  Tensor y = Tensor::Matrix(rows, cols);
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const Var &p : parts) {
    const Tensor &pv = p.value();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < pv.cols(); ++j) y(i, off + j) = pv(i, j);
    ids.push_back(p.id);
    offsets.push_back(off);
    off += pv.cols();
  }
  return parts[0].tape->Record(
      "ConcatCols", std::move(y), parts, [ids, offsets](Tape &tp, const Tensor &g) {
        for (std::size_t k = 0; k < ids.size(); ++k) {
          Tensor *gp = tp.GradOf(ids[k]);
          if (!gp) continue;
          for (std::size_t i = 0; i < gp->rows(); ++i)
            for (std::size_t j = 0; j < gp->cols(); ++j) (*gp)(i, j) += g(i, offsets[k] + j);
        }
      });
}

inline Var ConcatRows(const std::vector<Var> &parts) {
  if (parts.empty()) FailValidation("ConcatRows: no inputs");
  const std::size_t cols = parts[0].value().cols();
  std::size_t rows = 0;
  for (const Var &p : parts) {
    if (p.tape != parts[0].tape) FailValidation("ConcatRows: operands on different tapes");
    if (p.value().cols() != cols)
      FailValidation("ConcatRows: column mismatch ", p.value().ShapeString(), " vs ", cols);
    rows += p.value().rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const Var &p : parts) {
    data.insert(data.end(), p.value().data().begin(), p.value().data().end());
    ids.push_back(p.id);
    offsets.push_back(off);
    off += p.value().size();
  }
  return parts[0].tape->Record("ConcatRows", Tensor({rows, cols}, std::move(data)), parts,
                               [ids, offsets](Tape &tp, const Tensor &g) {
                                 for (std::size_t k = 0; k < ids.size(); ++k) {
                                   Tensor *gp = tp.GradOf(ids[k]);
                                   if (!gp) continue;
                                   for (std::size_t i = 0; i < gp->size(); ++i)
                                     (*gp)[i] += g[offsets[k] + i];
                                 }
                               });
}

inline Var SliceCols(Var x, std::size_t start, std::size_t len) {
  const Tensor &xv = x.value();
  internal::RequireMatrix(xv, "SliceCols");
  if (start + len > xv.cols())
    FailValidation("SliceCols: [", start, ", ", start + len, ") out of range for ",
                   xv.ShapeString());
  Tensor y = Tensor::Matrix(xv.rows(), len);
  for (std::size_t i = 0; i < xv.rows(); ++i)
    for (std::size_t j = 0; j < len; ++j) y(i, j) = xv(i, start + j);
  const std::size_t xi = x.id;
  return x.tape->Record("SliceCols", std::move(y), {x}, [xi, start](Tape &tp, const Tensor &g) {
    if (Tensor *gx = tp.GradOf(xi))
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) (*gx)(i, start + j) += g(i, j);
  });
}

/// Selects rows by index; repeated indices accumulate gradient.
inline Var GatherRows(Var x, const std::vector<std::size_t> &rows) {
  const Tensor &xv = x.value();
  internal::RequireMatrix(xv, "GatherRows");
  Tensor y = Tensor::Matrix(rows.size(), xv.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= xv.rows())
      FailValidation("GatherRows: row ", rows[k], " out of range for ", xv.ShapeString());
    for (std::size_t j = 0; j < xv.cols(); ++j) y(k, j) = xv(rows[k], j);
  }
  const std::size_t xi = x.id;
  return x.tape->Record("GatherRows", std::move(y), {x}, [xi, rows](Tape &tp, const Tensor &g) {
    if (Tensor *gx = tp.GradOf(xi))
      for (std::size_t k = 0; k < rows.size(); ++k)
        for (std::size_t j = 0; j < g.cols(); ++j) (*gx)(rows[k], j) += g(k, j);
  });
}

inline Var SliceRows(Var x, std::size_t start, std::size_t len) {
  if (start + len > x.value().rows())
    FailValidation("SliceRows: [", start, ", ", start + len, ") out of range for ",
                   x.value().ShapeString());
  std::vector<std::size_t> rows(len);
  std::iota(rows.begin(), rows.end(), start);
  return GatherRows(x, rows);
}

/// out(i, k) = x(i, columns[i][k]).  Every row picks the same number of
/// columns.
inline Var PickColumns(Var x, const std::vector<std::vector<std::size_t>> &columns) {
  const Tensor &xv = x.value();
  internal::RequireMatrix(xv, "PickColumns");
  if (columns.size() != xv.rows())
    FailValidation("PickColumns: ", columns.size(), " index rows for ", xv.ShapeString());
  const std::size_t k = columns.empty() ? 0 : columns[0].size();
  Tensor y = Tensor::Matrix(xv.rows(), k);
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    if (columns[i].size() != k) FailValidation("PickColumns: ragged index rows");
    for (std::size_t j = 0; j < k; ++j) {
      if (columns[i][j] >= xv.cols())
        FailValidation("PickColumns: column ", columns[i][j], " out of range for ",
                       xv.ShapeString());
      y(i, j) = xv(i, columns[i][j]);
    }
  }
  const std::size_t xi = x.id;
  return x.tape->Record("PickColumns", std::move(y), {x},
                        [xi, columns](Tape &tp, const Tensor &g) {
                          if (Tensor *gx = tp.GradOf(xi))
                            for (std::size_t i = 0; i < g.rows(); ++i)
                              for (std::size_t j = 0; j < g.cols(); ++j)
                                (*gx)(i, columns[i][j]) += g(i, j);
                        });
}

/// Forward value: one-hot of the row-wise argmax of `soft` (first index wins
/// ties).  Backward: identity, i.e. the gradient flows to the soft path.
inline Var StraightThrough(Var soft) {
  const Tensor &sv = soft.value();
  internal::RequireMatrix(sv, "StraightThrough");
  Tensor y = Tensor::Matrix(sv.rows(), sv.cols());
  for (std::size_t i = 0; i < sv.rows(); ++i) {
    auto row = sv.Row(i);
    const auto best = std::max_element(row.begin(), row.end()) - row.begin();
    y(i, static_cast<std::size_t>(best)) = 1.0;
  }
  const std::size_t si = soft.id;
  return soft.tape->Record("StraightThrough", std::move(y), {soft},
                           [si](Tape &tp, const Tensor &g) {
                             internal::AddInto(tp.GradOf(si), g);
                           });
}

/// Inverted dropout: surviving entries are scaled by 1/(1-rate) so the
/// expectation is preserved.  Callers skip this in evaluation mode.
inline Var Dropout(Var x, double rate, Rng *rng) {
  if (rate < 0.0 || rate >= 1.0) FailValidation("Dropout: rate must be in [0, 1), got ", rate);
  if (rate == 0.0) return x;
  Tensor mask(x.value().shape());
  const double keep = 1.0 / (1.0 - rate);
  for (double &m : mask.data()) m = rng->Bernoulli(rate) ? 0.0 : keep;
  return Mul(x, x.tape->Constant(std::move(mask)));
}

/// Per-row normalization to zero mean and unit variance (no affine part).
inline Var NormalizeRows(Var x, double eps = 1e-5) {
  const std::size_t d = x.value().cols();
  Var centered = Sub(x, BroadcastCols(MeanCols(x), d));
  Var var = MeanCols(Square(centered));
  Var inv = Sqrt(AddScalar(var, eps));
  return Div(centered, BroadcastCols(inv, d));
}

/// Scales every row to unit L2 norm; a zero row is an error because cosine
/// similarity is undefined for it.
inline Var L2NormalizeRows(Var x) {
  const Tensor &xv = x.value();
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    double s = 0.0;
    for (double v : xv.Row(i)) s += v * v;
    if (s == 0.0) FailValidation("L2NormalizeRows: zero-norm vector at row ", i);
  }
  Var norms = Sqrt(SumCols(Square(x)));
  return Div(x, BroadcastCols(norms, xv.cols()));
}

}  // namespace asrfuse

#endif  // ASRFUSE_NUMCORE_OPS_HPP_
