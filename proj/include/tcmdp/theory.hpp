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

#include <Eigen/Dense>

#include "tcmdp/eval.hpp"

namespace tcmdp {

// Reward as a function of (s, a) and the parameter point. The stationary-MDP
// machinery below is the one place where rewards may depend on the parameter.
using PsiRewardFn =
    std::function<double(int s, int a, std::span<const double> psi)>;

// One element of a non-stationary sequence: a fixed kernel and reward table.
struct StationaryMdp {
  int n_states = 0;
  int n_actions = 0;
  double gamma = 0.0;
  std::vector<double> kernel;  // [(s*A+a)*S + s']
  std::vector<double> reward;  // [s*A + a]

  std::span<const double> kernel_row(int s, int a) const {
    return {kernel.data() +
                static_cast<std::size_t>(s * n_actions + a) * n_states,
            static_cast<std::size_t>(n_states)};
  }
  double reward_at(int s, int a) const { return reward[s * n_actions + a]; }
};

// Freezes a kernel family at one parameter point; reward from the optional
// parameter-dependent map, else the model's own table.
inline StationaryMdp at_parameter(const ParametricMdp& mdp,
                                  std::span<const double> psi,
                                  const PsiRewardFn& reward_fn = nullptr) {
  int S = mdp.n_states();
  int A = mdp.n_actions();
  StationaryMdp out;
  out.n_states = S;
  out.n_actions = A;
  out.gamma = mdp.gamma();
  out.kernel.resize(static_cast<std::size_t>(S) * A * S);
  out.reward.resize(static_cast<std::size_t>(S) * A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      mdp.kernel_at(s, a, psi,
                    std::span<double>(out.kernel.data() +
                                          static_cast<std::size_t>(s * A + a) * S,
                                      S));
      out.reward[s * A + a] =
          reward_fn ? reward_fn(s, a, psi) : mdp.reward(s, a);
    }
  return out;
}

// Maximum L1 kernel-row distance and maximum absolute reward gap between two
// stationary MDPs of identical shape.
inline std::pair<double, double> drift_measure(const StationaryMdp& a,
                                               const StationaryMdp& b) {
  require(a.n_states == b.n_states && a.n_actions == b.n_actions,
          "drift_measure: shape mismatch");
  double kernel_drift = 0.0;
  double reward_drift = 0.0;
  for (int s = 0; s < a.n_states; ++s)
    for (int act = 0; act < a.n_actions; ++act) {
      auto pa = a.kernel_row(s, act);
      auto pb = b.kernel_row(s, act);
      double l1 = 0.0;
      for (int sp = 0; sp < a.n_states; ++sp) l1 += std::abs(pa[sp] - pb[sp]);
      kernel_drift = std::max(kernel_drift, l1);
      reward_drift = std::max(
          reward_drift, std::abs(a.reward_at(s, act) - b.reward_at(s, act)));
    }
  return {kernel_drift, reward_drift};
}

// Time-indexed MDP sequence with its measured per-step drift bounds.
struct MdpSequence {
  std::vector<StationaryMdp> steps;
  double kernel_bound = 0.0;  // max adjacent-pair L1 kernel drift
  double reward_bound = 0.0;  // max adjacent-pair reward gap
};

// Pushes a parameter trajectory through a kernel family; the declared bounds
// are measured from the generated sequence, never assumed.
inline MdpSequence sequence_from_trajectory(
    const ParametricMdp& mdp,
    const std::vector<std::vector<double>>& trajectory,
    const PsiRewardFn& reward_fn = nullptr) {
  require(!trajectory.empty(), "sequence needs at least one point");
  MdpSequence seq;
  for (const auto& psi : trajectory)
    seq.steps.push_back(at_parameter(mdp, psi, reward_fn));
  for (std::size_t t = 0; t + 1 < seq.steps.size(); ++t) {
    auto [kp, kr] = drift_measure(seq.steps[t], seq.steps[t + 1]);
    seq.kernel_bound = std::max(seq.kernel_bound, kp);
    seq.reward_bound = std::max(seq.reward_bound, kr);
  }
  return seq;
}

namespace detail {

inline void check_vanilla_policy(const PolicyTable& pi, const StationaryMdp& m) {
  require(pi.observation_class() == ObservationClass::Vanilla,
          "expected a vanilla policy");
  require(pi.n_states() == m.n_states && pi.n_actions() == m.n_actions,
          "policy shape does not match the model");
  pi.check_rows();
}

// Row-stochastic state chain P_pi(s -> s') and policy reward vector.
inline void policy_chain(const PolicyTable& pi, const StationaryMdp& m,
                         Eigen::MatrixXd& chain, Eigen::VectorXd& reward) {
  int S = m.n_states;
  int A = m.n_actions;
  chain.setZero(S, S);
  reward.setZero(S);
  for (int s = 0; s < S; ++s) {
    auto row = pi.row(s);
    for (int a = 0; a < A; ++a) {
      if (row[a] == 0.0) continue;
      auto p = m.kernel_row(s, a);
      for (int sp = 0; sp < S; ++sp) chain(s, sp) += row[a] * p[sp];
      reward[s] += row[a] * m.reward_at(s, a);
    }
  }
}

}  // namespace detail

// Normalized discounted state occupancy of a stationary policy, from the
// exact flow equations d = (1-gamma) * start + gamma * P_pi' d.
inline std::vector<double> occupancy(const PolicyTable& pi,
                                     const StationaryMdp& m,
                                     std::span<const double> start) {
  detail::check_vanilla_policy(pi, m);
  require(static_cast<int>(start.size()) == m.n_states,
          "start distribution size mismatch");
  double sum = 0.0;
  for (double p : start) {
    require(p >= 0.0, "start distribution has a negative entry");
    sum += p;
  }
  require(std::abs(sum - 1.0) <= 1e-9, "start distribution does not sum to 1");

  int S = m.n_states;
  Eigen::MatrixXd chain;
  Eigen::VectorXd reward;
  detail::policy_chain(pi, m, chain, reward);
  Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(S, S) - m.gamma * chain.transpose();
  Eigen::VectorXd rhs(S);
  for (int s = 0; s < S; ++s) rhs[s] = (1.0 - m.gamma) * start[s];
  Eigen::VectorXd d = system.partialPivLu().solve(rhs);
  if ((system * d - rhs).lpNorm<Eigen::Infinity>() > 1e-9)
    throw NumericalError("occupancy flow system solve failed");
  return std::vector<double>(d.data(), d.data() + S);
}

// Exact discounted value of a stationary policy under a start distribution,
// via the linear policy-evaluation system.
inline double policy_evaluation_value(const PolicyTable& pi,
                                      const StationaryMdp& m,
                                      std::span<const double> start) {
  detail::check_vanilla_policy(pi, m);
  int S = m.n_states;
  Eigen::MatrixXd chain;
  Eigen::VectorXd reward;
  detail::policy_chain(pi, m, chain, reward);
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S) - m.gamma * chain;
  Eigen::VectorXd v = system.partialPivLu().solve(reward);
  double out = 0.0;
  for (int s = 0; s < S; ++s) out += start[s] * v[s];
  return out;
}

// Average return through the occupancy identity,
// J = (1-gamma)^{-1} sum_s d(s) sum_a pi(a|s) r(s,a).
inline double return_via_occupancy(const PolicyTable& pi,
                                   const StationaryMdp& m,
                                   std::span<const double> start) {
  std::vector<double> d = occupancy(pi, m, start);
  double total = 0.0;
  for (int s = 0; s < m.n_states; ++s) {
    auto row = pi.row(s);
    double r = 0.0;
    for (int a = 0; a < m.n_actions; ++a) r += row[a] * m.reward_at(s, a);
    total += d[s] * r;
  }
  return total / (1.0 - m.gamma);
}

// Drift-bounded family of stationary MDPs spanned by grid trajectories with a
// per-step ball constraint, anchored at one grid point.
struct DriftFamily {
  const ParametricMdp* mdp = nullptr;
  StepBall ball{0};
  int anchor_psi = 0;
  PsiRewardFn reward_fn;  // optional parameter-dependent reward
  std::vector<double> start;  // start-state distribution; empty = uniform

  std::vector<double> start_distribution() const {
    if (!start.empty()) return start;
    return std::vector<double>(mdp->n_states(), 1.0 / mdp->n_states());
  }
};

// Largest one-ball-step drift over the family's grid, the Lipschitz constants
// of the family.
inline std::pair<double, double> family_drift_bounds(const DriftFamily& family) {
  const ParameterGrid& grid = family.mdp->grid();
  double lp = 0.0, lr = 0.0;
  for (int psi = 0; psi < grid.size(); ++psi) {
    StationaryMdp here =
        at_parameter(*family.mdp, grid.point(psi), family.reward_fn);
    for (int next : ball_neighbors(psi, family.ball, grid)) {
      if (next == psi) continue;
      auto [kp, kr] = drift_measure(
          here, at_parameter(*family.mdp, grid.point(next), family.reward_fn));
      lp = std::max(lp, kp);
      lr = std::max(lr, kr);
    }
  }
  return {lp, lr};
}

struct RobustObjectiveResult {
  double value = 0.0;
  double truncation_bound = 0.0;  // gamma^H / (1 - gamma)
  int n_endpoints = 0;
};

namespace detail {

// H-step truncated return of a stationary policy from a start distribution.
inline double truncated_return(const PolicyTable& pi, const StationaryMdp& m,
                               std::span<const double> start, int horizon) {
  detail::check_vanilla_policy(pi, m);
  Eigen::MatrixXd chain;
  Eigen::VectorXd reward;
  detail::policy_chain(pi, m, chain, reward);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(m.n_states);
  for (int h = 0; h < horizon; ++h) v = reward + m.gamma * chain * v;
  double out = 0.0;
  for (int s = 0; s < m.n_states; ++s) out += start[s] * v[s];
  return out;
}

}  // namespace detail

// Robust objective at episode index t: the minimum, over all drift-feasible
// grid trajectories of length t from the anchor, of the truncated stationary
// return in the trajectory's endpoint MDP. The return depends on the
// trajectory only through its endpoint, so the enumeration reduces to the
// t-step reachable set.
inline RobustObjectiveResult robust_objective(const PolicyTable& pi,
                                              const DriftFamily& family,
                                              int t, int horizon) {
  require(t >= 0, "robust_objective: negative episode index");
  require(horizon >= 1, "robust_objective: horizon must be positive");
  const ParameterGrid& grid = family.mdp->grid();
  int ball_size = 1;
  for (int i = 0; i < grid.dims(); ++i)
    ball_size *= 2 * family.ball.radius_cells() + 1;
  if (static_cast<double>(horizon) * ball_size * grid.size() > 1e7)
    throw Error("robust_objective: enumeration budget exceeded");

  std::vector<char> reached(grid.size(), 0);
  reached[family.anchor_psi] = 1;
  for (int step = 0; step < t; ++step) {
    std::vector<char> next = reached;
    for (int psi = 0; psi < grid.size(); ++psi)
      if (reached[psi])
        for (int nb : ball_neighbors(psi, family.ball, grid)) next[nb] = 1;
    reached.swap(next);
  }

  std::vector<double> start = family.start_distribution();
  RobustObjectiveResult out;
  out.value = std::numeric_limits<double>::infinity();
  for (int psi = 0; psi < grid.size(); ++psi) {
    if (!reached[psi]) continue;
    ++out.n_endpoints;
    StationaryMdp m =
        at_parameter(*family.mdp, grid.point(psi), family.reward_fn);
    out.value = std::min(
        out.value, detail::truncated_return(pi, m, start, horizon));
  }
  out.truncation_bound = std::pow(family.mdp->gamma(), horizon) /
                         (1.0 - family.mdp->gamma());
  return out;
}

// Smoothness rate of the robust objective per episode step.
inline double lipschitz_rate(double gamma, double kernel_bound,
                             double reward_bound) {
  return gamma / ((1.0 - gamma) * (1.0 - gamma)) * kernel_bound +
         1.0 / (1.0 - gamma) * reward_bound;
}

struct OneStepGap {
  double gap = 0.0;    // |J(pi, M_t) - J(pi, M_{t+1})|, exact evaluation
  double bound = 0.0;  // L_r/(1-gamma) + gamma L_P/(1-gamma)^2, pair-measured
  bool holds = false;
};

struct LipschitzCheckResult {
  double lhs = 0.0;      // |J^R(pi, t0) - J^R(pi, t0 + t)|
  double rhs = 0.0;      // L' * t
  double l_prime = 0.0;  // gamma/(1-gamma)^2 L_P + 1/(1-gamma) L_r
  double kernel_bound = 0.0;
  double reward_bound = 0.0;
  bool holds = false;    // t-step bound and every one-step bound
  std::vector<OneStepGap> one_step;
};

// Executable form of the smoothness guarantee: checks the t-step bound on the
// robust objective of the grid family, and the one-step bound on every
// adjacent pair of the supplied sequence. The sequence is re-validated
// against its declared drift bounds before any check runs.
inline LipschitzCheckResult lipschitz_bound_check(const PolicyTable& pi,
                                                  const DriftFamily& family,
                                                  const MdpSequence& seq,
                                                  int t0, int t,
                                                  int horizon = 600) {
  require(t0 >= 0 && t >= 1, "lipschitz_bound_check: bad episode indices");
  require(seq.steps.size() >= 2, "sequence needs at least two elements");
  for (std::size_t i = 0; i + 1 < seq.steps.size(); ++i) {
    auto [kp, kr] = drift_measure(seq.steps[i], seq.steps[i + 1]);
    require(kp <= seq.kernel_bound + 1e-12 && kr <= seq.reward_bound + 1e-12,
            "sequence violates its declared drift bounds");
  }

  double gamma = family.mdp->gamma();
  auto [lp, lr] = family_drift_bounds(family);
  LipschitzCheckResult out;
  out.kernel_bound = lp;
  out.reward_bound = lr;
  out.l_prime = lipschitz_rate(gamma, lp, lr);

  RobustObjectiveResult a = robust_objective(pi, family, t0, horizon);
  RobustObjectiveResult b = robust_objective(pi, family, t0 + t, horizon);
  out.lhs = std::abs(a.value - b.value);
  out.rhs = out.l_prime * t;
  out.holds = out.lhs <= out.rhs + 1e-9;

  std::vector<double> start(seq.steps.front().n_states,
                            1.0 / seq.steps.front().n_states);
  for (std::size_t i = 0; i + 1 < seq.steps.size(); ++i) {
    auto [kp, kr] = drift_measure(seq.steps[i], seq.steps[i + 1]);
    OneStepGap gap;
    gap.gap = std::abs(policy_evaluation_value(pi, seq.steps[i], start) -
                       policy_evaluation_value(pi, seq.steps[i + 1], start));
    gap.bound = kr / (1.0 - gamma) + gamma * kp / ((1.0 - gamma) * (1.0 - gamma));
    gap.holds = gap.gap <= gap.bound + 1e-9;
    out.holds = out.holds && gap.holds;
    out.one_step.push_back(gap);
  }
  return out;
}

}  // namespace tcmdp
