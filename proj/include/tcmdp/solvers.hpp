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

#include <chrono>
#include <functional>
#include <optional>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "tcmdp/operators.hpp"

namespace tcmdp {

struct SolveOptions {
  double epsilon = 1e-8;
  int max_iters = 100000;
  int workers = 1;
  BackupMode mode = BackupMode::MixedExact;
};

struct SolveReport {
  int iterations = 0;
  double final_residual = std::numeric_limits<double>::infinity();
  double epsilon = 0.0;
  BackupMode mode = BackupMode::MixedExact;
  bool converged = false;
  double wall_time_s = 0.0;
  std::vector<double> residuals;  // sup-norm successive differences
};

struct SolveResult {
  ValueField value;
  SolveReport report;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, SolveReport report_,
                      ValueField best_)
      : Error(what), report(std::move(report_)), best(std::move(best_)) {}
  SolveReport report;
  ValueField best;  // last iterate
};

// Jacobi fixed-point iteration of an arbitrary backup. Stops once the
// successive sup-norm difference falls below epsilon; the returned iterate v
// then satisfies ||T v - v|| <= gamma * epsilon.
inline SolveResult value_iteration(
    const std::function<ValueField(const ValueField&)>& op, ValueField v0,
    double epsilon, int max_iters, BackupMode mode = BackupMode::MixedExact) {
  require(epsilon > 0.0, "value_iteration: epsilon must be positive");
  require(max_iters >= 1, "value_iteration: max_iters must be positive");
  auto t0 = std::chrono::steady_clock::now();
  SolveReport report;
  report.epsilon = epsilon;
  report.mode = mode;
  ValueField v = std::move(v0);
  for (int i = 1; i <= max_iters; ++i) {
    ValueField next = op(v);
    double resid = max_abs_diff(next, v);
    report.residuals.push_back(resid);
    report.iterations = i;
    report.final_residual = resid;
    v = std::move(next);
    if (resid <= epsilon) {
      report.converged = true;
      break;
    }
  }
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return {std::move(v), std::move(report)};
}

namespace detail {

inline SolveResult finish(SolveResult result, const char* what) {
  if (!result.report.converged)
    throw NonConvergenceError(std::string(what) +
                                  ": no convergence within max_iters "
                                  "(residual " +
                                  std::to_string(result.report.final_residual) +
                                  ")",
                              result.report, result.value);
  return result;
}

}  // namespace detail

inline SolveResult solve_nominal(const ParametricMdp& mdp, int psi,
                                 const SolveOptions& opts = {}) {
  return detail::finish(
      value_iteration(
          [&, psi](const ValueField& v) { return standard_backup(v, mdp, psi); },
          ValueField::state_only(mdp.n_states()), opts.epsilon, opts.max_iters,
          opts.mode),
      "nominal solve");
}

inline SolveResult solve_rect_robust(const ParametricMdp& mdp,
                                     const SolveOptions& opts = {}) {
  return detail::finish(
      value_iteration(
          [&](const ValueField& v) {
            return rect_robust_backup(v, mdp, opts.workers);
          },
          ValueField::state_only(mdp.n_states()), opts.epsilon, opts.max_iters,
          opts.mode),
      "rectangular robust solve");
}

inline SolveResult solve_param_robust(const ParametricMdp& mdp,
                                      const SolveOptions& opts = {}) {
  return detail::finish(
      value_iteration(
          [&](const ValueField& v) {
            return param_robust_backup(v, mdp, opts.mode, opts.workers);
          },
          ValueField::state_only(mdp.n_states()), opts.epsilon, opts.max_iters,
          opts.mode),
      "parametric robust solve");
}

inline SolveResult solve_tc_optimal(const ParametricMdp& mdp,
                                    const StepBall& ball,
                                    const SolveOptions& opts = {}) {
  return detail::finish(
      value_iteration(
          [&](const ValueField& v) {
            return tc_backup_optimal(v, mdp, ball, opts.mode, opts.workers);
          },
          ValueField::augmented(mdp.n_states(), mdp.grid().size()),
          opts.epsilon, opts.max_iters, opts.mode),
      "time-constrained solve");
}

inline SolveResult solve_tc_policy(const ParametricMdp& mdp,
                                   const PolicyTable& pi, const StepBall& ball,
                                   const SolveOptions& opts = {}) {
  return detail::finish(
      value_iteration(
          [&](const ValueField& v) {
            return tc_backup_policy(v, pi, mdp, ball, opts.workers);
          },
          ValueField::augmented(mdp.n_states(), mdp.grid().size()),
          opts.epsilon, opts.max_iters, opts.mode),
      "time-constrained policy evaluation");
}

struct OraclePolicyPair {
  PolicyTable agent;     // oracle class, maximin row per (s, psi)
  PolicyTable adversary; // deterministic minimizing best response
};

// Greedy policy pair of an (approximate) fixed point of the time-constrained
// optimal backup. Adversary ties break toward the lowest displacement index.
inline OraclePolicyPair extract_oracle_policy(const ValueField& v_star,
                                              const ParametricMdp& mdp,
                                              const StepBall& ball,
                                              BackupMode mode,
                                              int workers = 1) {
  detail::check_augmented(v_star, mdp);
  int S = mdp.n_states();
  int A = mdp.n_actions();
  int P = mdp.grid().size();
  std::vector<double> q = detail::one_step_q(v_star, mdp, workers);
  auto neighbors = neighbor_table(mdp.grid(), ball);
  auto displacements = ball.displacements(mdp.grid().dims());

  PolicyTable agent = PolicyTable::uniform(ObservationClass::Oracle, mdp);
  PolicyTable adversary =
      PolicyTable::uniform(ObservationClass::Adversary, mdp, &ball);

  std::vector<double> payoff;
  for (int psi = 0; psi < P; ++psi) {
    const auto& nbr = neighbors[psi];
    int cols = static_cast<int>(nbr.size());
    payoff.assign(static_cast<std::size_t>(A) * cols, 0.0);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a)
        for (int c = 0; c < cols; ++c)
          payoff[a * cols + c] =
              q[static_cast<std::size_t>(nbr[c]) * S * A + s * A + a];
      std::vector<double> row(A, 0.0);
      if (mode == BackupMode::MixedExact && A > 1 && cols > 1) {
        row = solve_matrix_game(payoff, A, cols).row_strategy;
      } else {
        int best = 0;
        pure_maximin(payoff, A, cols, &best);
        row[best] = 1.0;
      }
      agent.set_row(agent.oracle_key(s, psi), row);

      // Adversary best response per realized action.
      for (int a = 0; a < A; ++a) {
        int arg = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t d = 0; d < displacements.size(); ++d) {
          int next = apply_step(psi, displacements[d], ball, mdp.grid());
          double val = q[static_cast<std::size_t>(next) * S * A + s * A + a];
          if (val < best - 1e-15) {
            best = val;
            arg = static_cast<int>(d);
          }
        }
        adversary.set_deterministic(adversary.adversary_key(s, a, psi), arg);
      }
    }
  }
  return {std::move(agent), std::move(adversary)};
}

// Greedy vanilla policies of the state-only fixed points. The rectangular
// policy is the pure maximin row; the parametric policy is the maximin mixed
// strategy of each state's game over all grid columns (pure under
// PureActions); the nominal policy is the plain greedy argmax at one node.
inline PolicyTable extract_rect_policy(const ValueField& v_star,
                                       const ParametricMdp& mdp) {
  detail::check_state_only(v_star, mdp);
  int S = mdp.n_states();
  int A = mdp.n_actions();
  int P = mdp.grid().size();
  std::vector<double> q = detail::one_step_q(v_star, mdp, 1);
  PolicyTable out = PolicyTable::uniform(ObservationClass::Vanilla, mdp);
  for (int s = 0; s < S; ++s) {
    int best_a = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < A; ++a) {
      double worst = std::numeric_limits<double>::infinity();
      for (int psi = 0; psi < P; ++psi)
        worst = std::min(
            worst, q[static_cast<std::size_t>(psi) * S * A + s * A + a]);
      if (worst > best) {
        best = worst;
        best_a = a;
      }
    }
    out.set_deterministic(s, best_a);
  }
  return out;
}

inline PolicyTable extract_param_policy(const ValueField& v_star,
                                        const ParametricMdp& mdp,
                                        BackupMode mode) {
  detail::check_state_only(v_star, mdp);
  int S = mdp.n_states();
  int A = mdp.n_actions();
  int P = mdp.grid().size();
  std::vector<double> q = detail::one_step_q(v_star, mdp, 1);
  PolicyTable out = PolicyTable::uniform(ObservationClass::Vanilla, mdp);
  std::vector<double> payoff(static_cast<std::size_t>(A) * P);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a)
      for (int psi = 0; psi < P; ++psi)
        payoff[a * P + psi] =
            q[static_cast<std::size_t>(psi) * S * A + s * A + a];
    if (mode == BackupMode::MixedExact && A > 1) {
      out.set_row(s, solve_matrix_game(payoff, A, P).row_strategy);
    } else {
      int best = 0;
      pure_maximin(payoff, A, P, &best);
      out.set_deterministic(s, best);
    }
  }
  return out;
}

inline PolicyTable extract_nominal_policy(const ValueField& v_star,
                                          const ParametricMdp& mdp, int psi) {
  detail::check_state_only(v_star, mdp);
  int S = mdp.n_states();
  int A = mdp.n_actions();
  std::vector<double> q = detail::one_step_q(v_star, mdp, 1);
  PolicyTable out = PolicyTable::uniform(ObservationClass::Vanilla, mdp);
  for (int s = 0; s < S; ++s) {
    int best_a = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < A; ++a) {
      double val = q[static_cast<std::size_t>(psi) * S * A + s * A + a];
      if (val > best) {
        best = val;
        best_a = a;
      }
    }
    out.set_deterministic(s, best_a);
  }
  return out;
}

namespace detail {

// Indexing of the adversary's dynamic-programming state for each agent
// observation class. The DP runs over (obs, psi) pairs; obs collapses to the
// plain state except for stacked agents, where it carries the predecessor.
struct ObsSpace {
  ObservationClass cls;
  int S, A, P;

  int n_obs() const {
    return cls == ObservationClass::Stacked ? stacked_obs_count(S, A) : S;
  }
  int state_of(int obs) const {
    return cls == ObservationClass::Stacked ? obs / (S * A + 1) : obs;
  }
  int next_obs(int s_next, int s, int a) const {
    return cls == ObservationClass::Stacked ? stacked_obs(s_next, s, a, S, A)
                                            : s_next;
  }
  int start_obs(int s) const {
    return cls == ObservationClass::Stacked ? stacked_start_obs(s, S, A) : s;
  }
  int agent_key(const PolicyTable& pi, int obs, int psi) const {
    switch (cls) {
      case ObservationClass::Oracle: return pi.oracle_key(obs, psi);
      case ObservationClass::Vanilla: return pi.vanilla_key(obs);
      case ObservationClass::Stacked: return obs;
      default: throw ContractError("adversary policies cannot act as agents");
    }
  }
};

}  // namespace detail

struct BestResponseResult {
  PolicyTable adversary;      // deterministic, keyed (s, a, psi)
  std::vector<double> value;  // worst-case value, indexed obs * n_psi + psi
  int n_obs = 0;
  int n_psi = 0;
  int n_states = 0;
  int n_actions = 0;
  ObservationClass agent_class = ObservationClass::Vanilla;
  SolveReport report;

  double start_value(int s, int psi) const {
    int obs = agent_class == ObservationClass::Stacked
                  ? stacked_start_obs(s, n_states, n_actions)
                  : s;
    return value[static_cast<std::size_t>(obs) * n_psi + psi];
  }
  // Worst case over the adversary's initial parameter choice.
  double worst_start_value(int s) const {
    double m = std::numeric_limits<double>::infinity();
    for (int psi = 0; psi < n_psi; ++psi)
      m = std::min(m, start_value(s, psi));
    return m;
  }
  double min_start_value() const {
    double m = std::numeric_limits<double>::infinity();
    for (int s = 0; s < n_states; ++s) m = std::min(m, worst_start_value(s));
    return m;
  }
};

// Worst-case time-constrained adversary against a fixed agent. The adversary
// observes the realized action: W(x) = E_{a~pi(obs)} min_b [r(s,a) +
// gamma * E_{p_{psi+b}} W(x')], solved to residual epsilon by value
// iteration over the joint (obs, psi) space.
inline BestResponseResult adversary_best_response(const PolicyTable& agent,
                                                  const ParametricMdp& mdp,
                                                  const StepBall& ball,
                                                  const SolveOptions& opts = {}) {
  require(agent.observation_class() != ObservationClass::Adversary,
          "agent policy expected");
  require(agent.n_states() == mdp.n_states() &&
              agent.n_actions() == mdp.n_actions(),
          "policy shape does not match the model");
  if (agent.observation_class() == ObservationClass::Oracle)
    require(agent.n_psi() == mdp.grid().size(),
            "oracle policy grid does not match the model");
  agent.check_rows();

  auto t0 = std::chrono::steady_clock::now();
  int S = mdp.n_states();
  int A = mdp.n_actions();
  int P = mdp.grid().size();
  detail::ObsSpace space{agent.observation_class(), S, A, P};
  int n_obs = space.n_obs();
  auto neighbors = neighbor_table(mdp.grid(), ball);

  std::vector<double> w(static_cast<std::size_t>(n_obs) * P, 0.0);
  std::vector<double> w_next(w.size());
  // expected[psi'][s][a] = E_{s' ~ p_psi'(s,a)} W(next_obs(s', s, a), psi')
  std::vector<double> expected(static_cast<std::size_t>(P) * S * A);

  auto refresh_expected = [&]() {
    detail::parallel_for(P, opts.workers, [&](int psi) {
      double* out = expected.data() + static_cast<std::size_t>(psi) * S * A;
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
          auto row = mdp.kernel(s, a, psi);
          double e = 0.0;
          for (int sp = 0; sp < S; ++sp)
            e += row[sp] *
                 w[static_cast<std::size_t>(space.next_obs(sp, s, a)) * P + psi];
          out[s * A + a] = e;
        }
    });
  };

  SolveReport report;
  report.epsilon = opts.epsilon;
  report.mode = opts.mode;
  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    refresh_expected();
    double resid = 0.0;
    for (int obs = 0; obs < n_obs; ++obs) {
      int s = space.state_of(obs);
      for (int psi = 0; psi < P; ++psi) {
        auto pi_row = agent.row(space.agent_key(agent, obs, psi));
        double total = 0.0;
        for (int a = 0; a < A; ++a) {
          if (pi_row[a] == 0.0) continue;
          double worst = std::numeric_limits<double>::infinity();
          for (int next : neighbors[psi])
            worst = std::min(
                worst, expected[static_cast<std::size_t>(next) * S * A +
                                s * A + a]);
          total += pi_row[a] * (mdp.reward(s, a) + mdp.gamma() * worst);
        }
        w_next[static_cast<std::size_t>(obs) * P + psi] = total;
        resid = std::max(
            resid, std::abs(total - w[static_cast<std::size_t>(obs) * P + psi]));
      }
    }
    w.swap(w_next);
    report.iterations = iter;
    report.final_residual = resid;
    report.residuals.push_back(resid);
    if (resid <= opts.epsilon) {
      report.converged = true;
      break;
    }
  }
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (!report.converged)
    throw NonConvergenceError("adversary best response did not converge",
                              report, ValueField::state_only(1));

  // Extract the deterministic minimizing displacement per (s, a, psi); ties
  // break toward the lowest displacement index.
  refresh_expected();
  auto displacements = ball.displacements(mdp.grid().dims());
  PolicyTable adversary =
      PolicyTable::uniform(ObservationClass::Adversary, mdp, &ball);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a)
      for (int psi = 0; psi < P; ++psi) {
        int arg = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t d = 0; d < displacements.size(); ++d) {
          int next = apply_step(psi, displacements[d], ball, mdp.grid());
          double val =
              expected[static_cast<std::size_t>(next) * S * A + s * A + a];
          if (val < best - 1e-15) {
            best = val;
            arg = static_cast<int>(d);
          }
        }
        adversary.set_deterministic(adversary.adversary_key(s, a, psi), arg);
      }

  BestResponseResult result{std::move(adversary), std::move(w), n_obs,     P,
                            S,                    A,            space.cls,
                            std::move(report)};
  return result;
}

// Exact worst open-loop displacement sequence value over a finite horizon,
// by exhaustive enumeration. Requires deterministic kernels and agents: the
// enumerated adaptive minimum then coincides with the open-loop minimum.
// Returns the H-step discounted worst return indexed s0 * n_psi + psi0.
inline std::vector<double> exhaustive_adversary_oracle(const PolicyTable& agent,
                                                       const ParametricMdp& mdp,
                                                       const StepBall& ball,
                                                       int horizon) {
  require(horizon >= 0, "horizon must be nonnegative");
  int S = mdp.n_states();
  int A = mdp.n_actions();
  int P = mdp.grid().size();
  require(agent.deterministic(), "exhaustive oracle needs a deterministic agent");
  for (int psi = 0; psi < P; ++psi)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        auto row = mdp.kernel(s, a, psi);
        double top = *std::max_element(row.begin(), row.end());
        require(top >= 1.0 - 1e-12,
                "exhaustive oracle needs deterministic kernels");
      }
  auto displacements = ball.displacements(mdp.grid().dims());
  double branches = 1.0;
  for (int t = 0; t < horizon; ++t) {
    branches *= static_cast<double>(displacements.size());
    require(branches <= 1e7, "exhaustive oracle enumeration budget exceeded");
  }

  detail::ObsSpace space{agent.observation_class(), S, A, P};

  // min over b sequences of sum gamma^t r; obs tracks what the agent sees.
  std::function<double(int, int, int, int)> worst = [&](int t, int obs,
                                                        int psi,
                                                        int depth) -> double {
    if (depth == horizon) return 0.0;
    int s = space.state_of(obs);
    int a = agent.argmax(space.agent_key(agent, obs, psi));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : displacements) {
      int next_psi = apply_step(psi, b, ball, mdp.grid());
      auto row = mdp.kernel(s, a, next_psi);
      int s_next = static_cast<int>(
          std::max_element(row.begin(), row.end()) - row.begin());
      double val = mdp.reward(s, a) +
                   mdp.gamma() * worst(t + 1, space.next_obs(s_next, s, a),
                                       next_psi, depth + 1);
      best = std::min(best, val);
    }
    return best;
  };

  std::vector<double> out(static_cast<std::size_t>(S) * P);
  for (int s0 = 0; s0 < S; ++s0)
    for (int psi0 = 0; psi0 < P; ++psi0)
      out[static_cast<std::size_t>(s0) * P + psi0] =
          horizon == 0 ? 0.0 : worst(0, space.start_obs(s0), psi0, 0);
  return out;
}

struct TrainOptions {
  int rounds = 4;
  double epsilon = 1e-8;
  int max_iters = 100000;
  int workers = 1;
};

struct TrainResult {
  PolicyTable agent;                // best retained agent
  std::vector<double> round_scores; // [0] = initial agent, then per round
  double best_score = 0.0;
  int best_round = 0;
};

namespace detail {

// Discounted occupancy of the joint (obs, psi) chain under a fixed agent and
// deterministic adversary, from a uniform start distribution over states with
// a uniform initial parameter. Solves the flow equations exactly.
inline std::vector<double> joint_occupancy(const PolicyTable& agent,
                                           const PolicyTable& adversary,
                                           const ParametricMdp& mdp,
                                           const StepBall& ball,
                                           const ObsSpace& space) {
  int S = mdp.n_states();
  int A = mdp.n_actions();
  int P = mdp.grid().size();
  int n = space.n_obs() * P;
  double gamma = mdp.gamma();
  auto displacements = ball.displacements(mdp.grid().dims());

  std::vector<Eigen::Triplet<double>> triplets;
  for (int obs = 0; obs < space.n_obs(); ++obs) {
    int s = space.state_of(obs);
    for (int psi = 0; psi < P; ++psi) {
      int x = obs * P + psi;
      auto pi_row = agent.row(space.agent_key(agent, obs, psi));
      for (int a = 0; a < A; ++a) {
        if (pi_row[a] == 0.0) continue;
        int b = adversary.argmax(adversary.adversary_key(s, a, psi));
        int next_psi = apply_step(psi, displacements[b], ball, mdp.grid());
        auto row = mdp.kernel(s, a, next_psi);
        for (int sp = 0; sp < S; ++sp) {
          if (row[sp] == 0.0) continue;
          int y = space.next_obs(sp, s, a) * P + next_psi;
          triplets.emplace_back(y, x, -gamma * pi_row[a] * row[sp]);
        }
      }
    }
  }
  for (int i = 0; i < n; ++i) triplets.emplace_back(i, i, 1.0);

  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(n);
  double mass = (1.0 - gamma) / (S * P);
  for (int s = 0; s < S; ++s)
    for (int psi = 0; psi < P; ++psi) rho[space.start_obs(s) * P + psi] = mass;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success)
    throw NumericalError("occupancy flow system factorization failed");
  Eigen::VectorXd mu = lu.solve(rho);
  if (lu.info() != Eigen::Success)
    throw NumericalError("occupancy flow system solve failed");
  return std::vector<double>(mu.data(), mu.data() + n);
}

inline std::vector<double> start_values(const BestResponseResult& br) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(br.n_states) * br.n_psi);
  for (int s = 0; s < br.n_states; ++s)
    for (int psi = 0; psi < br.n_psi; ++psi)
      out.push_back(br.start_value(s, psi));
  return out;
}

}  // namespace detail

// Tabular alternating best-response training for partially informed agents.
// Each round solves the adversary's best response, evaluates the joint
// system, and replaces every observation's action by the argmax of the
// occupancy-weighted Q over the hidden components. There is no convergence
// guarantee in this partially observable game, so the best candidate across
// rounds is retained: a candidate replaces the incumbent only when its worst
// start-state value improves and no start-state value degrades.
//
// Passing the oracle class solves the fully observable fixed point directly
// and returns its greedy policy; this is the sanity case where every round
// reproduces the exact solution.
inline TrainResult alternating_train(ObservationClass cls,
                                     const ParametricMdp& mdp,
                                     const StepBall& ball,
                                     const TrainOptions& opts = {},
                                     const PolicyTable* init = nullptr) {
  require(opts.rounds >= 1, "alternating_train: need at least one round");
  require(cls != ObservationClass::Adversary,
          "alternating_train trains agent classes");
  SolveOptions solve_opts;
  solve_opts.epsilon = opts.epsilon;
  solve_opts.max_iters = opts.max_iters;
  solve_opts.workers = opts.workers;
  solve_opts.mode = BackupMode::PureActions;

  int S = mdp.n_states();
  int A = mdp.n_actions();
  int P = mdp.grid().size();
  detail::ObsSpace space{cls, S, A, P};

  PolicyTable current = init ? *init : PolicyTable::uniform(cls, mdp);
  require(current.observation_class() == cls,
          "initial policy class mismatch");

  std::optional<PolicyTable> oracle_candidate;
  if (cls == ObservationClass::Oracle) {
    SolveResult fixed_point = solve_tc_optimal(mdp, ball, solve_opts);
    oracle_candidate = extract_oracle_policy(fixed_point.value, mdp, ball,
                                             BackupMode::PureActions,
                                             opts.workers)
                           .agent;
  }

  BestResponseResult br = adversary_best_response(current, mdp, ball, solve_opts);
  TrainResult result{current, {br.min_start_value()}, br.min_start_value(), 0};
  std::vector<double> best_starts = detail::start_values(br);
  auto displacements = ball.displacements(mdp.grid().dims());

  for (int round = 1; round <= opts.rounds; ++round) {
    PolicyTable candidate = current;
    if (oracle_candidate) {
      candidate = *oracle_candidate;
    } else {
      // Q over the joint space under the frozen adversary, one lookahead from
      // the best-response value.
      std::vector<double> q(static_cast<std::size_t>(space.n_obs()) * P * A);
      for (int obs = 0; obs < space.n_obs(); ++obs) {
        int s = space.state_of(obs);
        for (int psi = 0; psi < P; ++psi)
          for (int a = 0; a < A; ++a) {
            int b = br.adversary.argmax(br.adversary.adversary_key(s, a, psi));
            int next_psi = apply_step(psi, displacements[b], ball, mdp.grid());
            auto row = mdp.kernel(s, a, next_psi);
            double e = 0.0;
            for (int sp = 0; sp < S; ++sp)
              e += row[sp] *
                   br.value[static_cast<std::size_t>(space.next_obs(sp, s, a)) *
                                P +
                            next_psi];
            q[(static_cast<std::size_t>(obs) * P + psi) * A + a] =
                mdp.reward(s, a) + mdp.gamma() * e;
          }
      }

      std::vector<double> mu =
          detail::joint_occupancy(current, br.adversary, mdp, ball, space);
      for (int obs = 0; obs < space.n_obs(); ++obs) {
        double mass = 0.0;
        std::vector<double> score(A, 0.0);
        for (int psi = 0; psi < P; ++psi) {
          double m = std::max(mu[static_cast<std::size_t>(obs) * P + psi], 0.0);
          mass += m;
          for (int a = 0; a < A; ++a)
            score[a] +=
                m * q[(static_cast<std::size_t>(obs) * P + psi) * A + a];
        }
        if (mass <= 1e-15) continue;  // unreachable observation, keep the row
        int arg = static_cast<int>(
            std::max_element(score.begin(), score.end()) - score.begin());
        candidate.set_deterministic(obs, arg);
      }
    }

    br = adversary_best_response(candidate, mdp, ball, solve_opts);
    double sigma = br.min_start_value();
    result.round_scores.push_back(sigma);

    std::vector<double> starts = detail::start_values(br);
    bool dominates = true;
    for (std::size_t i = 0; i < starts.size(); ++i)
      if (starts[i] < best_starts[i] - 1e-12) {
        dominates = false;
        break;
      }
    if (sigma > result.best_score && dominates) {
      result.agent = candidate;
      result.best_score = sigma;
      result.best_round = round;
      best_starts = std::move(starts);
    }
    current = std::move(candidate);
  }
  return result;
}

}  // namespace tcmdp
