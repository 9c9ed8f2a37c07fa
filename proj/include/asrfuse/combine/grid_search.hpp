// asrfuse/combine/grid_search.hpp

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

#ifndef ASRFUSE_COMBINE_GRID_SEARCH_HPP_
#define ASRFUSE_COMBINE_GRID_SEARCH_HPP_

#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

#include "asrfuse/numcore/error.hpp"

namespace asrfuse {

struct GridSearchResult {
  std::vector<double> weights;
  double score = 0.0;
  std::size_t evaluated = 0;
};

/// Every weight vector on the simplex with K entries at resolution `step`,
/// in ascending lexicographic order.
inline std::vector<std::vector<double>> SimplexGrid(std::size_t k, double step) {
  if (k == 0) FailValidation("SimplexGrid: need at least one system");
  if (!(step > 0.0 && step <= 1.0)) FailValidation("SimplexGrid: step must be in (0, 1], got ", step);
  const double inv = 1.0 / step;
  const auto n = static_cast<std::size_t>(std::llround(inv));
  if (std::abs(inv - static_cast<double>(n)) > 1e-9 * inv)
    FailValidation("SimplexGrid: 1/step must be an integer, got step ", step);
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> parts(k, 0);
  // Depth-first over the first K-1 entries; the last takes the remainder.
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t left) {
    if (pos + 1 == k) {
      parts[pos] = left;
      std::vector<double> w(k);
      for (std::size_t i = 0; i < k; ++i)
        w[i] = static_cast<double>(parts[i]) / static_cast<double>(n);
      out.push_back(std::move(w));
      return;
    }
    for (std::size_t p = 0; p <= left; ++p) {
      parts[pos] = p;
      rec(pos + 1, left - p);
    }
  };
  rec(0, n);
  return out;
}

/// Exhaustive minimization of `scorer` over SimplexGrid(k, step).  With
/// `workers` > 1 grid points are scored concurrently (the scorer must be
/// thread-safe); the reduction is ordered, so the lexicographically smallest
/// minimizer wins regardless of scheduling.
inline GridSearchResult GridSearchWeights(
    std::size_t k, double step, const std::function<double(const std::vector<double> &)> &scorer,
    std::size_t workers = 1) {
  const auto grid = SimplexGrid(k, step);
  std::vector<double> scores(grid.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) scores[i] = scorer(grid[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < grid.size(); i = next++) scores[i] = scorer(grid[i]);
        } catch (...) {
          errors[w] = std::current_exception();
          next = grid.size();
        }
      });
    }
    for (auto &t : pool) t.join();
    for (auto &e : errors)
      if (e) std::rethrow_exception(e);
  }
  GridSearchResult best;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(scores[i]))
      FailNumerical("GridSearchWeights: scorer returned ", scores[i], " at grid point ", i);
    if (i == 0 || scores[i] < best.score) {
      best.weights = grid[i];
      best.score = scores[i];
    }
  }
  best.evaluated = grid.size();
  return best;
}

}  // namespace asrfuse

#endif  // ASRFUSE_COMBINE_GRID_SEARCH_HPP_
