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

#include <thread>

#include "tcmdp/matrix_game.hpp"
#include "tcmdp/param_mdp.hpp"
#include "tcmdp/policy.hpp"
#include "tcmdp/value_field.hpp"

namespace tcmdp {

// MixedExact solves each per-state zero-sum matrix game exactly over mixed
// agent strategies; PureActions restricts the agent to deterministic actions
// (max over rows of the column minimum).
enum class BackupMode { PureActions, MixedExact };

inline const char* to_string(BackupMode mode) {
  return mode == BackupMode::PureActions ? "pure" : "mixed";
}

namespace detail {

// Static-chunk parallel map; cells are independent, so results do not depend
// on the worker count.
template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  if (workers <= 1 || n < 2 * workers) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    int lo = w * chunk;
    int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

// One-step lookahead payoffs q[psi][(s*A)+a] = r(s,a) + gamma * E_psi[v].
// For an augmented field the expectation uses the value slice of the same
// grid point as the kernel, which is exactly the term shared by all four
// backup families.
inline std::vector<double> one_step_q(const ValueField& v,
                                      const ParametricMdp& mdp, int workers) {
  int S = mdp.n_states();
  int A = mdp.n_actions();
  int P = mdp.grid().size();
  bool augmented = v.kind() == FieldKind::Augmented;
  std::vector<double> q(static_cast<std::size_t>(P) * S * A);
  parallel_for(P, workers, [&](int psi) {
    std::span<const double> slice = augmented ? v.slice(psi) : v.slice(0);
    double* out = q.data() + static_cast<std::size_t>(psi) * S * A;
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        auto row = mdp.kernel(s, a, psi);
        double e = 0.0;
        for (int sp = 0; sp < S; ++sp) e += row[sp] * slice[sp];
        out[s * A + a] = mdp.reward(s, a) + mdp.gamma() * e;
      }
  });
  return q;
}

inline void check_state_only(const ValueField& v, const ParametricMdp& mdp) {
  require(v.kind() == FieldKind::StateOnly && v.n_states() == mdp.n_states(),
          "expected a state-only value field matching the model");
  require(v.all_finite(), "value field has non-finite entries");
}

inline void check_augmented(const ValueField& v, const ParametricMdp& mdp) {
  require(v.kind() == FieldKind::Augmented &&
              v.n_states() == mdp.n_states() &&
              v.n_psi() == mdp.grid().size(),
          "expected an augmented value field matching the model");
  require(v.all_finite(), "value field has non-finite entries");
}

}  // namespace detail

// Plain Bellman optimality backup for the nominal MDP frozen at one grid
// point: v'(s) = max_a [r(s,a) + gamma * E_psi[v]].
inline ValueField standard_backup(const ValueField& v, const ParametricMdp& mdp,
                                  int psi) {
  detail::check_state_only(v, mdp);
  require(psi >= 0 && psi < mdp.grid().size(), "parameter index out of range");
  int S = mdp.n_states();
  int A = mdp.n_actions();
  ValueField out = ValueField::state_only(S);
  auto slice = v.slice(0);
  for (int s = 0; s < S; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < A; ++a) {
      auto row = mdp.kernel(s, a, psi);
      double e = 0.0;
      for (int sp = 0; sp < S; ++sp) e += row[sp] * slice[sp];
      best = std::max(best, mdp.reward(s, a) + mdp.gamma() * e);
    }
    out.at(s) = best;
  }
  return out;
}

// sa-rectangular robust backup: the adversary picks the grid point
// independently per (s,a), so the outer maximum is attained at a pure action:
// v'(s) = max_a min_psi [r(s,a) + gamma * E_psi[v]].
inline ValueField rect_robust_backup(const ValueField& v,
                                     const ParametricMdp& mdp,
                                     int workers = 1) {
  detail::check_state_only(v, mdp);
  int S = mdp.n_states();
  int A = mdp.n_actions();
  int P = mdp.grid().size();
  std::vector<double> q = detail::one_step_q(v, mdp, workers);
  ValueField out = ValueField::state_only(S);
  for (int s = 0; s < S; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < A; ++a) {
      double worst = std::numeric_limits<double>::infinity();
      for (int psi = 0; psi < P; ++psi)
        worst = std::min(worst, q[static_cast<std::size_t>(psi) * S * A +
                                  s * A + a]);
      best = std::max(best, worst);
    }
    out.at(s) = best;
  }
  return out;
}

// Parametric robust backup: one zero-sum matrix game per state with agent
// actions as rows and grid points as columns.
inline ValueField param_robust_backup(const ValueField& v,
                                      const ParametricMdp& mdp,
                                      BackupMode mode, int workers = 1) {
  detail::check_state_only(v, mdp);
  int S = mdp.n_states();
  int A = mdp.n_actions();
  int P = mdp.grid().size();
  std::vector<double> q = detail::one_step_q(v, mdp, workers);
  ValueField out = ValueField::state_only(S);
  std::vector<double> payoff(static_cast<std::size_t>(A) * P);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a)
      for (int psi = 0; psi < P; ++psi)
        payoff[a * P + psi] =
            q[static_cast<std::size_t>(psi) * S * A + s * A + a];
    out.at(s) = mode == BackupMode::MixedExact
                    ? matrix_game_value(payoff, A, P)
                    : pure_maximin(payoff, A, P);
  }
  return out;
}

// Time-constrained optimal backup on the augmented space: per (s, psi) a
// matrix game with agent actions as rows and one-step-reachable grid points
// as columns.
inline ValueField tc_backup_optimal(const ValueField& v,
                                    const ParametricMdp& mdp,
                                    const StepBall& ball, BackupMode mode,
                                    int workers = 1) {
  detail::check_augmented(v, mdp);
  int S = mdp.n_states();
  int A = mdp.n_actions();
  int P = mdp.grid().size();
  std::vector<double> q = detail::one_step_q(v, mdp, workers);
  auto neighbors = neighbor_table(mdp.grid(), ball);
  ValueField out = ValueField::augmented(S, P);
  detail::parallel_for(P, workers, [&](int psi) {
    const auto& nbr = neighbors[psi];
    int cols = static_cast<int>(nbr.size());
    std::vector<double> payoff(static_cast<std::size_t>(A) * cols);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a)
        for (int c = 0; c < cols; ++c)
          payoff[a * cols + c] =
              q[static_cast<std::size_t>(nbr[c]) * S * A + s * A + a];
      out.at(s, psi) = mode == BackupMode::MixedExact
                           ? matrix_game_value(payoff, A, cols)
                           : pure_maximin(payoff, A, cols);
    }
  });
  return out;
}

// Policy-evaluation variant of the time-constrained backup. The adversary
// best-responds to the agent's mixed commitment: the minimum is taken on the
// expected payoff, after the expectation over actions.
inline ValueField tc_backup_policy(const ValueField& v, const PolicyTable& pi,
                                   const ParametricMdp& mdp,
                                   const StepBall& ball, int workers = 1) {
  detail::check_augmented(v, mdp);
  require(pi.observation_class() == ObservationClass::Oracle,
          "tc_backup_policy expects an oracle-class policy");
  require(pi.n_states() == mdp.n_states() &&
              pi.n_actions() == mdp.n_actions() &&
              pi.n_psi() == mdp.grid().size(),
          "policy shape does not match the model");
  pi.check_rows();
  int S = mdp.n_states();
  int A = mdp.n_actions();
  int P = mdp.grid().size();
  std::vector<double> q = detail::one_step_q(v, mdp, workers);
  auto neighbors = neighbor_table(mdp.grid(), ball);
  ValueField out = ValueField::augmented(S, P);
  detail::parallel_for(P, workers, [&](int psi) {
    const auto& nbr = neighbors[psi];
    for (int s = 0; s < S; ++s) {
      auto row = pi.row(pi.oracle_key(s, psi));
      double worst = std::numeric_limits<double>::infinity();
      for (int next : nbr) {
        const double* qn =
            q.data() + static_cast<std::size_t>(next) * S * A + s * A;
        double e = 0.0;
        for (int a = 0; a < A; ++a) e += row[a] * qn[a];
        worst = std::min(worst, e);
      }
      out.at(s, psi) = worst;
    }
  });
  return out;
}

}  // namespace tcmdp
