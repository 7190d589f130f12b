// Copyright 2026 the tcmdp authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tcmdp/common.hpp"

namespace tcmdp {

inline constexpr double kGameGapTolerance = 1e-9;

struct MatrixGameSolution {
  double value = 0.0;
  std::vector<double> row_strategy;  // maximizer, mixed
  std::vector<double> col_strategy;  // minimizer, mixed
  double duality_gap = 0.0;
};

// Security level of the best pure row: max_i min_j M[i,j].
inline double pure_maximin(std::span<const double> payoff, int rows, int cols,
                           int* best_row = nullptr) {
  require(rows >= 1 && cols >= 1 &&
              static_cast<int>(payoff.size()) == rows * cols,
          "pure_maximin: bad matrix shape");
  double best = -std::numeric_limits<double>::infinity();
  int arg = 0;
  for (int i = 0; i < rows; ++i) {
    double row_min = payoff[i * cols];
    for (int j = 1; j < cols; ++j)
      row_min = std::min(row_min, payoff[i * cols + j]);
    if (row_min > best) {
      best = row_min;
      arg = i;
    }
  }
  if (best_row) *best_row = arg;
  return best;
}

namespace detail {

// Primal simplex on: max 1'w  s.t.  M'w <= 1, w >= 0, where M' is the payoff
// shifted to be strictly positive. The optimum recovers both players' optimal
// mixed strategies of the zero-sum game (column player from w, row player
// from the slack reduced costs).
class GameSimplex {
 public:
  // payoff is row-major rows x cols; row player maximizes.
  MatrixGameSolution solve(std::span<const double> payoff, int rows,
                           int cols) {
    double lo = payoff[0];
    for (double v : payoff) lo = std::min(lo, v);
    double shift = 1.0 - lo;

    int width = cols + rows + 1;
    tableau_.assign(static_cast<std::size_t>(rows + 1) * width, 0.0);
    basis_.resize(rows);
    auto t = [&](int r, int c) -> double& { return tableau_[r * width + c]; };

    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) t(i, j) = payoff[i * cols + j] + shift;
      t(i, cols + i) = 1.0;
      t(i, width - 1) = 1.0;
      basis_[i] = cols + i;
    }
    for (int j = 0; j < cols; ++j) t(rows, j) = -1.0;

    const int max_pivots = 50 * (rows + cols) + 200;
    for (int iter = 0;; ++iter) {
      if (iter > max_pivots)
        throw NumericalError("matrix game simplex did not terminate");
      bool bland = iter > 10 * (rows + cols) + 50;

      int enter = -1;
      double most_negative = -1e-12;
      for (int j = 0; j < cols + rows; ++j) {
        if (t(rows, j) < most_negative) {
          enter = j;
          if (bland) break;
          most_negative = t(rows, j);
        }
      }
      if (enter < 0) break;

      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < rows; ++i) {
        double a = t(i, enter);
        if (a > 1e-12) {
          double ratio = t(i, width - 1) / a;
          if (ratio < best_ratio - 1e-15 ||
              (ratio < best_ratio + 1e-15 && leave >= 0 &&
               basis_[i] < basis_[leave])) {
            best_ratio = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0)
        throw NumericalError("matrix game LP unbounded");  // cannot happen: M' > 0

      double pivot = t(leave, enter);
      for (int j = 0; j < width; ++j) t(leave, j) /= pivot;
      for (int i = 0; i <= rows; ++i) {
        if (i == leave) continue;
        double factor = t(i, enter);
        if (factor == 0.0) continue;
        for (int j = 0; j < width; ++j) t(i, j) -= factor * t(leave, j);
      }
      basis_[leave] = enter;
    }

    double z = t(rows, width - 1);  // sum of w at the optimum, = 1/value'
    MatrixGameSolution sol;
    sol.row_strategy.assign(rows, 0.0);
    sol.col_strategy.assign(cols, 0.0);
    for (int i = 0; i < rows; ++i)
      if (basis_[i] < cols) sol.col_strategy[basis_[i]] = t(i, width - 1) / z;
    for (int i = 0; i < rows; ++i)
      sol.row_strategy[i] = t(rows, cols + i) / z;
    normalize(sol.row_strategy);
    normalize(sol.col_strategy);
    sol.value = 1.0 / z - shift;
    return sol;
  }

 private:
  static void normalize(std::vector<double>& p) {
    double sum = 0.0;
    for (double& v : p) {
      v = std::max(v, 0.0);
      sum += v;
    }
    for (double& v : p) v /= sum;
  }

  std::vector<double> tableau_;
  std::vector<int> basis_;
};

}  // namespace detail

// Exact value and optimal mixed strategies of a finite zero-sum matrix game;
// the row player maximizes, the column player minimizes. The returned value
// is the midpoint of the two strategies' security levels and the duality gap
// is certified to be at most kGameGapTolerance.
inline MatrixGameSolution solve_matrix_game(std::span<const double> payoff,
                                            int rows, int cols) {
  require(rows >= 1 && cols >= 1 &&
              static_cast<int>(payoff.size()) == rows * cols,
          "solve_matrix_game: bad matrix shape");

  MatrixGameSolution sol;
  if (rows == 1) {
    sol.row_strategy = {1.0};
    sol.col_strategy.assign(cols, 0.0);
    int arg = 0;
    for (int j = 1; j < cols; ++j)
      if (payoff[j] < payoff[arg]) arg = j;
    sol.col_strategy[arg] = 1.0;
    sol.value = payoff[arg];
    return sol;
  }
  if (cols == 1) {
    sol.col_strategy = {1.0};
    sol.row_strategy.assign(rows, 0.0);
    int arg = 0;
    for (int i = 1; i < rows; ++i)
      if (payoff[i] > payoff[arg]) arg = i;
    sol.row_strategy[arg] = 1.0;
    sol.value = payoff[arg];
    return sol;
  }

  detail::GameSimplex simplex;
  sol = simplex.solve(payoff, rows, cols);

  // Certify: security level of each returned strategy brackets the value.
  double lower = std::numeric_limits<double>::infinity();
  for (int j = 0; j < cols; ++j) {
    double col = 0.0;
    for (int i = 0; i < rows; ++i)
      col += sol.row_strategy[i] * payoff[i * cols + j];
    lower = std::min(lower, col);
  }
  double upper = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < rows; ++i) {
    double row = 0.0;
    for (int j = 0; j < cols; ++j)
      row += sol.col_strategy[j] * payoff[i * cols + j];
    upper = std::max(upper, row);
  }
  sol.duality_gap = upper - lower;
  sol.value = 0.5 * (lower + upper);
  if (!(sol.duality_gap <= kGameGapTolerance))
    throw NumericalError("matrix game duality gap above tolerance");
  return sol;
}

// Game value only.
inline double matrix_game_value(std::span<const double> payoff, int rows,
                                int cols) {
  return solve_matrix_game(payoff, rows, cols).value;
}

}  // namespace tcmdp
