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

#include "tcmdp/policy.hpp"
#include "tcmdp/value_field.hpp"

namespace tcmdp {

// Random desk-scale instances for property sweeps.
struct RandomInstanceOptions {
  int max_states = 10;
  int max_actions = 4;
  int max_dims = 2;
  int max_points = 5;
  int max_grid_size = 25;
  double gamma_lo = 0.5;
  double gamma_hi = 0.95;
};

inline ParametricMdp random_mdp(Rng& rng,
                                const RandomInstanceOptions& opts = {}) {
  int S = 2 + rng.uniform_int(opts.max_states - 1);
  int A = 1 + rng.uniform_int(opts.max_actions);
  int dims = 1 + rng.uniform_int(opts.max_dims);
  int points;
  do {
    points = 2 + rng.uniform_int(opts.max_points - 1);
  } while (std::pow(points, dims) > opts.max_grid_size);
  ParameterGrid grid(dims, points);
  double gamma = rng.uniform(opts.gamma_lo, opts.gamma_hi);

  std::vector<double> reward(static_cast<std::size_t>(S) * A);
  for (double& r : reward) r = rng.uniform01();

  std::vector<double> kernels(static_cast<std::size_t>(grid.size()) * S * A * S);
  for (std::size_t row = 0; row < kernels.size() / S; ++row) {
    double sum = 0.0;
    for (int sp = 0; sp < S; ++sp) {
      double v = -std::log(1.0 - rng.uniform01());
      kernels[row * S + sp] = v;
      sum += v;
    }
    for (int sp = 0; sp < S; ++sp) kernels[row * S + sp] /= sum;
  }
  return ParametricMdp(S, A, gamma, std::move(reward), grid,
                       std::move(kernels), "random");
}

inline ValueField random_field(Rng& rng, FieldKind kind,
                               const ParametricMdp& mdp, double lo = -5.0,
                               double hi = 5.0) {
  ValueField field = kind == FieldKind::StateOnly
                         ? ValueField::state_only(mdp.n_states())
                         : ValueField::augmented(mdp.n_states(),
                                                 mdp.grid().size());
  for (double& v : field.data()) v = rng.uniform(lo, hi);
  return field;
}

inline PolicyTable random_policy(Rng& rng, ObservationClass cls,
                                 const ParametricMdp& mdp,
                                 const StepBall* ball = nullptr) {
  PolicyTable table = PolicyTable::uniform(cls, mdp, ball);
  std::vector<double> row(table.row_len());
  for (int key = 0; key < table.n_keys(); ++key) {
    double sum = 0.0;
    for (double& p : row) {
      p = -std::log(1.0 - rng.uniform01());
      sum += p;
    }
    for (double& p : row) p /= sum;
    table.set_row(key, row);
  }
  return table;
}

}  // namespace tcmdp
