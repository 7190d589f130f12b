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
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tcmdp/common.hpp"

namespace tcmdp {

inline constexpr double kSimplexTolerance = 1e-12;

// Lattice over the normalized parameter box [0,1]^d with G nodes per axis,
// node coordinates {0, 1/(G-1), ..., 1}. Flat indices are row-major with the
// first dimension slowest.
class ParameterGrid {
 public:
  ParameterGrid(int dims, int points_per_dim)
      : dims_(dims), points_(points_per_dim) {
    if (dims < 1) throw ConfigError("parameter grid needs at least 1 dimension");
    if (points_per_dim < 2)
      throw ConfigError("parameter grid needs at least 2 points per axis");
    size_ = 1;
    for (int i = 0; i < dims; ++i) {
      if (size_ > 1000000 / points_per_dim)
        throw ConfigError("parameter grid too large");
      size_ *= points_per_dim;
    }
  }

  int dims() const { return dims_; }
  int points_per_dim() const { return points_; }
  int size() const { return size_; }
  double spacing() const { return 1.0 / (points_ - 1); }

  void coords(int flat, std::span<int> out) const {
    require(flat >= 0 && flat < size_, "grid index out of range");
    for (int i = dims_ - 1; i >= 0; --i) {
      out[i] = flat % points_;
      flat /= points_;
    }
  }

  std::vector<int> coords(int flat) const {
    std::vector<int> c(dims_);
    coords(flat, c);
    return c;
  }

  int flatten(std::span<const int> c) const {
    int flat = 0;
    for (int i = 0; i < dims_; ++i) {
      require(c[i] >= 0 && c[i] < points_, "grid coordinate out of range");
      flat = flat * points_ + c[i];
    }
    return flat;
  }

  // Normalized coordinates of a node.
  void point(int flat, std::span<double> out) const {
    require(flat >= 0 && flat < size_, "grid index out of range");
    for (int i = dims_ - 1; i >= 0; --i) {
      out[i] = (flat % points_) * spacing();
      flat /= points_;
    }
  }

  std::vector<double> point(int flat) const {
    std::vector<double> p(dims_);
    point(flat, p);
    return p;
  }

  int nearest(std::span<const double> p) const {
    require(static_cast<int>(p.size()) == dims_, "point dimension mismatch");
    int flat = 0;
    for (int i = 0; i < dims_; ++i) {
      int c = static_cast<int>(std::lround(p[i] * (points_ - 1)));
      c = std::clamp(c, 0, points_ - 1);
      flat = flat * points_ + c;
    }
    return flat;
  }

  bool operator==(const ParameterGrid& other) const {
    return dims_ == other.dims_ && points_ == other.points_;
  }

 private:
  int dims_;
  int points_;
  int size_;
};

// Per-step displacement set of the parameter adversary: the infinity-norm
// ball of radius k in grid cells, B = {b in Z^d : |b_i| <= k}.
class StepBall {
 public:
  explicit StepBall(int radius_cells) : radius_(radius_cells) {
    if (radius_cells < 0) throw ConfigError("step ball radius must be >= 0");
  }

  // Snaps a continuous radius in normalized coordinates to grid cells.
  static StepBall from_radius(double radius, const ParameterGrid& grid) {
    if (radius < 0) throw ConfigError("step ball radius must be >= 0");
    return StepBall(
        static_cast<int>(std::lround(radius * (grid.points_per_dim() - 1))));
  }

  int radius_cells() const { return radius_; }

  // All displacement vectors in lexicographic order, (2k+1)^d of them.
  std::vector<std::vector<int>> displacements(int dims) const {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(dims, -radius_);
    while (true) {
      out.push_back(cur);
      int i = dims - 1;
      while (i >= 0 && cur[i] == radius_) cur[i--] = -radius_;
      if (i < 0) break;
      ++cur[i];
    }
    return out;
  }

  bool contains(std::span<const int> b) const {
    for (int v : b)
      if (std::abs(v) > radius_) return false;
    return true;
  }

 private:
  int radius_;
};

// Moves a grid point by a displacement, clamping to the box.
inline int apply_step(int psi, std::span<const int> b, const StepBall& ball,
                      const ParameterGrid& grid) {
  require(static_cast<int>(b.size()) == grid.dims(),
          "displacement dimension mismatch");
  require(ball.contains(b), "displacement outside the step ball");
  std::vector<int> c = grid.coords(psi);
  for (int i = 0; i < grid.dims(); ++i)
    c[i] = std::clamp(c[i] + b[i], 0, grid.points_per_dim() - 1);
  return grid.flatten(c);
}

// Grid points reachable from psi in one step; sorted, deduplicated (clamping
// can map distinct displacements to the same node). Always contains psi.
inline std::vector<int> ball_neighbors(int psi, const StepBall& ball,
                                       const ParameterGrid& grid) {
  std::vector<int> out;
  for (const auto& b : ball.displacements(grid.dims()))
    out.push_back(apply_step(psi, b, ball, grid));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Neighbor lists for every grid point, as used by a full DP sweep.
inline std::vector<std::vector<int>> neighbor_table(const ParameterGrid& grid,
                                                    const StepBall& ball) {
  std::vector<std::vector<int>> table(grid.size());
  for (int psi = 0; psi < grid.size(); ++psi)
    table[psi] = ball_neighbors(psi, ball, grid);
  return table;
}

struct KernelViolation {
  int state;
  int action;
  int psi;
  std::string kind;  // "row_sum", "negative_entry", "reward_range"
  double magnitude;
};

struct ValidationReport {
  std::vector<KernelViolation> violations;
  bool ok() const { return violations.empty(); }
};

// Continuous kernel family: fills a probability row over successor states for
// a parameter point in [0,1]^d.
using KernelFamily = std::function<void(int s, int a, std::span<const double> psi,
                                        std::span<double> out)>;

// Finite MDP whose transition kernel is indexed by a point of the parameter
// grid. Kernels are materialized per grid node at construction; environments
// built from a continuous family also answer off-grid queries exactly.
// Immutable after construction; all reads are safe to share across threads.
class ParametricMdp {
 public:
  // Materializes the kernel family on the grid. Throws ModelError if any row
  // is not a probability vector or any reward is outside [0,1].
  ParametricMdp(int n_states, int n_actions, double gamma,
                std::vector<double> reward, ParameterGrid grid,
                KernelFamily family, std::string name = "")
      : ParametricMdp(n_states, n_actions, gamma, std::move(reward),
                      std::move(grid),
                      materialize(n_states, n_actions, grid, family),
                      std::move(name)) {
    family_ = std::move(family);
  }

  // Explicit per-node kernel tables, laid out [psi][(s*A+a)*S + s'].
  ParametricMdp(int n_states, int n_actions, double gamma,
                std::vector<double> reward, ParameterGrid grid,
                std::vector<double> kernels, std::string name = "")
      : ParametricMdp(unchecked(n_states, n_actions, gamma, std::move(reward),
                                std::move(grid), std::move(kernels),
                                std::move(name))) {
    ValidationReport report = validate(*this);
    if (!report.ok())
      throw ModelError("invalid model '" + name_ + "': " +
                       std::to_string(report.violations.size()) +
                       " kernel/reward violations");
  }

  // Skips construction-time validation; used to build deliberately corrupted
  // models for fault-injection checks.
  static ParametricMdp unchecked(int n_states, int n_actions, double gamma,
                                 std::vector<double> reward, ParameterGrid grid,
                                 std::vector<double> kernels,
                                 std::string name = "") {
    if (n_states < 1 || n_actions < 1)
      throw ConfigError("model needs at least one state and action");
    if (!(gamma >= 0.0 && gamma < 1.0))
      throw ConfigError("discount must lie in [0,1)");
    if (static_cast<int>(reward.size()) != n_states * n_actions)
      throw ConfigError("reward table size mismatch");
    if (static_cast<int>(kernels.size()) !=
        grid.size() * n_states * n_actions * n_states)
      throw ConfigError("kernel table size mismatch");
    return ParametricMdp(Tag{}, n_states, n_actions, gamma, std::move(reward),
                         std::move(grid), std::move(kernels), std::move(name));
  }

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  double gamma() const { return gamma_; }
  const ParameterGrid& grid() const { return grid_; }
  const std::string& name() const { return name_; }

  double reward(int s, int a) const { return reward_[s * n_actions_ + a]; }
  std::span<const double> reward_table() const { return reward_; }

  // Kernel row at a grid node.
  std::span<const double> kernel(int s, int a, int psi) const {
    require(s >= 0 && s < n_states_, "state index out of range");
    require(a >= 0 && a < n_actions_, "action index out of range");
    require(psi >= 0 && psi < grid_.size(), "parameter index out of range");
    return {kernels_.data() + row_offset(s, a, psi),
            static_cast<std::size_t>(n_states_)};
  }

  bool has_continuous_kernel() const { return static_cast<bool>(family_); }

  // Kernel row at an arbitrary point of [0,1]^d. Falls back to the nearest
  // grid node when the model was built from explicit tables.
  void kernel_at(int s, int a, std::span<const double> psi,
                 std::span<double> out) const {
    if (family_) {
      family_(s, a, psi, out);
    } else {
      auto row = kernel(s, a, grid_.nearest(psi));
      std::copy(row.begin(), row.end(), out.begin());
    }
  }

  friend ValidationReport validate(const ParametricMdp& mdp);

 private:
  struct Tag {};
  ParametricMdp(Tag, int n_states, int n_actions, double gamma,
                std::vector<double> reward, ParameterGrid grid,
                std::vector<double> kernels, std::string name)
      : n_states_(n_states),
        n_actions_(n_actions),
        gamma_(gamma),
        reward_(std::move(reward)),
        grid_(std::move(grid)),
        kernels_(std::move(kernels)),
        name_(std::move(name)) {}

  std::size_t row_offset(int s, int a, int psi) const {
    return (static_cast<std::size_t>(psi) * n_states_ * n_actions_ +
            static_cast<std::size_t>(s) * n_actions_ + a) *
           n_states_;
  }

  static std::vector<double> materialize(int n_states, int n_actions,
                                         const ParameterGrid& grid,
                                         const KernelFamily& family) {
    std::vector<double> kernels(static_cast<std::size_t>(grid.size()) *
                                n_states * n_actions * n_states);
    std::vector<double> point(grid.dims());
    std::size_t offset = 0;
    for (int psi = 0; psi < grid.size(); ++psi) {
      grid.point(psi, point);
      for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) {
          family(s, a, point,
                 std::span<double>(kernels.data() + offset, n_states));
          offset += n_states;
        }
    }
    return kernels;
  }

  int n_states_;
  int n_actions_;
  double gamma_;
  std::vector<double> reward_;
  ParameterGrid grid_;
  std::vector<double> kernels_;
  KernelFamily family_;
  std::string name_;
};

// Kernel row at a grid node with the simplex postcondition re-checked.
inline std::span<const double> kernel_eval(const ParametricMdp& mdp, int s,
                                           int a, int psi) {
  auto row = mdp.kernel(s, a, psi);
  double sum = 0.0;
  for (double p : row) {
    if (p < 0.0) throw ModelError("kernel row has a negative entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance)
    throw ModelError("kernel row does not sum to 1");
  return row;
}

// Scans every (s, a, psi) kernel row and every reward entry; report-only.
inline ValidationReport validate(const ParametricMdp& mdp) {
  ValidationReport report;
  for (int psi = 0; psi < mdp.grid_.size(); ++psi)
    for (int s = 0; s < mdp.n_states_; ++s)
      for (int a = 0; a < mdp.n_actions_; ++a) {
        auto row = mdp.kernel(s, a, psi);
        double sum = 0.0;
        double min_entry = 0.0;
        for (double p : row) {
          sum += p;
          min_entry = std::min(min_entry, p);
        }
        if (min_entry < 0.0)
          report.violations.push_back(
              {s, a, psi, "negative_entry", -min_entry});
        if (std::abs(sum - 1.0) > kSimplexTolerance)
          report.violations.push_back(
              {s, a, psi, "row_sum", std::abs(sum - 1.0)});
      }
  for (int s = 0; s < mdp.n_states_; ++s)
    for (int a = 0; a < mdp.n_actions_; ++a) {
      double r = mdp.reward(s, a);
      if (r < 0.0 || r > 1.0)
        report.violations.push_back(
            {s, a, -1, "reward_range", std::max(-r, r - 1.0)});
    }
  return report;
}

}  // namespace tcmdp
