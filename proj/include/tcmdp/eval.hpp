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

#include "tcmdp/schedules.hpp"
#include "tcmdp/solvers.hpp"

namespace tcmdp {

struct RolloutConfig {
  int horizon = 1000;
  int episodes = 10;
  std::uint64_t seed = 0;
  bool discounted = false;  // episodic sums by default
  int start_state = -1;     // -1: uniform per episode
};

struct EpisodeReturn {
  double undiscounted = 0.0;
  double discounted = 0.0;
};

struct EvalResult {
  std::string condition;
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> raw;  // per-episode returns
};

namespace detail {

inline EvalResult summarize(std::string condition,
                            const std::vector<EpisodeReturn>& episodes,
                            bool discounted) {
  EvalResult out;
  out.condition = std::move(condition);
  for (const auto& ep : episodes)
    out.raw.push_back(discounted ? ep.discounted : ep.undiscounted);
  double sum = 0.0;
  for (double v : out.raw) sum += v;
  out.mean = sum / out.raw.size();
  double ss = 0.0;
  for (double v : out.raw) ss += (v - out.mean) * (v - out.mean);
  out.sd = out.raw.size() > 1 ? std::sqrt(ss / (out.raw.size() - 1)) : 0.0;
  return out;
}

// One episode of the interaction loop: the agent acts on its observation of
// (s_t, psi_t), the disturbance advances the parameter to psi_{t+1}, and the
// transition is sampled from the kernel at psi_{t+1}.
//
// Disturbance must provide:
//   std::vector<double> init(Rng&)                      - psi_0
//   void step(int t, int s, int a, std::vector<double>& psi, Rng&)
template <typename Disturbance>
EpisodeReturn run_episode(const ParametricMdp& mdp, const PolicyTable& agent,
                          Disturbance& disturbance, const RolloutConfig& cfg,
                          Rng& rng) {
  int S = mdp.n_states();
  int A = mdp.n_actions();
  detail::ObsSpace space{agent.observation_class(), S, A, mdp.grid().size()};
  std::vector<double> psi = disturbance.init(rng);
  std::vector<double> row(S);

  int s = cfg.start_state >= 0 ? cfg.start_state : rng.uniform_int(S);
  require(s < S, "rollout start state out of range");
  int obs = space.start_obs(s);
  EpisodeReturn ret;
  double discount = 1.0;
  for (int t = 0; t < cfg.horizon; ++t) {
    int psi_idx = mdp.grid().nearest(psi);
    auto pi_row = agent.row(space.agent_key(agent, obs, psi_idx));
    int a = sample_categorical(pi_row, rng.uniform01());
    double r = mdp.reward(s, a);
    ret.undiscounted += r;
    ret.discounted += discount * r;
    discount *= mdp.gamma();

    disturbance.step(t + 1, s, a, psi, rng);
    mdp.kernel_at(s, a, psi, row);
    int s_next = sample_categorical(row, rng.uniform01());
    obs = space.next_obs(s_next, s, a);
    s = s_next;
  }
  return ret;
}

struct ScheduleDisturbance {
  Schedule schedule;
  std::vector<double> init(Rng&) { return schedule.init(); }
  void step(int t, int, int, std::vector<double>& psi, Rng&) {
    psi = schedule.step(t, psi);
  }
};

struct FrozenDisturbance {
  std::vector<double> point;
  std::vector<double> init(Rng&) { return point; }
  void step(int, int, int, std::vector<double>&, Rng&) {}
};

// Learned adversary: the parameter lives on the grid and moves by the table's
// displacement for the realized (s, a, psi).
struct AdversaryDisturbance {
  const PolicyTable* table;
  const ParametricMdp* mdp;
  const StepBall* ball;
  std::vector<std::vector<int>> displacements;
  int psi_idx = 0;

  AdversaryDisturbance(const PolicyTable& t, const ParametricMdp& m,
                       const StepBall& b)
      : table(&t), mdp(&m), ball(&b),
        displacements(b.displacements(m.grid().dims())) {}

  std::vector<double> init(Rng& rng) {
    psi_idx = rng.uniform_int(mdp->grid().size());
    return mdp->grid().point(psi_idx);
  }
  void step(int, int s, int a, std::vector<double>& psi, Rng&) {
    int b = table->argmax(table->adversary_key(s, a, psi_idx));
    psi_idx = apply_step(psi_idx, displacements[b], *ball, mdp->grid());
    mdp->grid().point(psi_idx, psi);
  }
};

template <typename Disturbance>
std::vector<EpisodeReturn> run_episodes(const ParametricMdp& mdp,
                                        const PolicyTable& agent,
                                        Disturbance& disturbance,
                                        const RolloutConfig& cfg,
                                        std::uint64_t salt) {
  require(cfg.horizon >= 1 && cfg.episodes >= 1,
          "rollout needs positive horizon and episode count");
  agent.check_rows();
  std::vector<EpisodeReturn> out;
  out.reserve(cfg.episodes);
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(ep), salt);
    out.push_back(run_episode(mdp, agent, disturbance, cfg, rng));
  }
  return out;
}

}  // namespace detail

// Episodes against a fixed schedule. The schedule consumes its own seeded
// stream, one episode after another.
inline std::vector<EpisodeReturn> rollout(const ParametricMdp& mdp,
                                          const PolicyTable& agent,
                                          const ScheduleConfig& schedule_cfg,
                                          const RolloutConfig& cfg) {
  require(schedule_cfg.dims == mdp.grid().dims(),
          "schedule dimension does not match the model");
  require(schedule_cfg.horizon >= cfg.horizon,
          "schedule horizon shorter than rollout horizon");
  detail::ScheduleDisturbance d{Schedule(schedule_cfg)};
  return detail::run_episodes(mdp, agent, d, cfg, 0x5c4ed);
}

// Episodes against a learned adversary table; psi_0 uniform on the grid.
inline std::vector<EpisodeReturn> rollout(const ParametricMdp& mdp,
                                          const PolicyTable& agent,
                                          const PolicyTable& adversary,
                                          const StepBall& ball,
                                          const RolloutConfig& cfg) {
  require(adversary.observation_class() == ObservationClass::Adversary,
          "disturbance policy must be adversary class");
  detail::AdversaryDisturbance d(adversary, mdp, ball);
  return detail::run_episodes(mdp, agent, d, cfg, 0xadf);
}

// Episodes with the parameter frozen at one point for whole episodes.
inline std::vector<EpisodeReturn> rollout_frozen(const ParametricMdp& mdp,
                                                 const PolicyTable& agent,
                                                 std::span<const double> psi,
                                                 const RolloutConfig& cfg,
                                                 std::uint64_t salt = 0) {
  detail::FrozenDisturbance d{std::vector<double>(psi.begin(), psi.end())};
  return detail::run_episodes(mdp, agent, d, cfg, 0xf0 ^ salt);
}

struct TcWorstCaseResult {
  EvalResult eval;               // Monte Carlo returns under the adversary
  BestResponseResult response;   // the trained adversary and its DP values
};

// Worst-case time-constrained evaluation: solve the adversary's best response
// against the fixed agent at the evaluation radius, then roll out against it.
inline TcWorstCaseResult tc_worst_case_eval(const PolicyTable& agent,
                                            const ParametricMdp& mdp,
                                            double eval_radius,
                                            const RolloutConfig& cfg,
                                            const SolveOptions& solve_opts = {}) {
  StepBall ball = StepBall::from_radius(eval_radius, mdp.grid());
  BestResponseResult br = adversary_best_response(agent, mdp, ball, solve_opts);
  auto episodes = rollout(mdp, agent, br.adversary, ball, cfg);
  EvalResult eval =
      detail::summarize("tc_worst_case", episodes, cfg.discounted);
  return {std::move(eval), std::move(br)};
}

struct StaticGridPoint {
  std::vector<double> psi;
  double mean = 0.0;
  double sd = 0.0;
};

struct StaticGridResult {
  double worst_case = 0.0;
  double average = 0.0;
  std::vector<StaticGridPoint> points;
};

// Static evaluation over a fresh lattice: freeze the parameter at each point
// for whole episodes, average per point, report min and mean over points.
// The evaluation lattice may be finer than the solver grid; off-grid points
// use the environment's continuous kernel family when available.
inline StaticGridResult static_grid_eval(const PolicyTable& agent,
                                         const ParametricMdp& mdp,
                                         int segments,
                                         const RolloutConfig& cfg) {
  require(segments >= 2, "static grid needs at least 2 segments per axis");
  ParameterGrid eval_grid(mdp.grid().dims(), segments);
  StaticGridResult out;
  out.worst_case = std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (int g = 0; g < eval_grid.size(); ++g) {
    std::vector<double> psi = eval_grid.point(g);
    auto episodes = rollout_frozen(mdp, agent, psi, cfg,
                                   static_cast<std::uint64_t>(g));
    EvalResult summary =
        detail::summarize("static", episodes, cfg.discounted);
    out.points.push_back({std::move(psi), summary.mean, summary.sd});
    out.worst_case = std::min(out.worst_case, summary.mean);
    total += summary.mean;
  }
  out.average = total / eval_grid.size();
  return out;
}

// One evaluation per schedule kind, with disjoint seed streams per kind.
inline std::vector<EvalResult> schedule_sweep(
    const PolicyTable& agent, const ParametricMdp& mdp,
    const std::vector<ScheduleKind>& kinds, double radius,
    const RolloutConfig& cfg) {
  require(!kinds.empty(), "schedule sweep needs at least one kind");
  std::vector<EvalResult> out;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    ScheduleConfig sc;
    sc.kind = kinds[i];
    sc.dims = mdp.grid().dims();
    sc.radius = radius;
    sc.horizon = cfg.horizon;
    sc.seed = cfg.seed ^ (0x9e3779b9u * (i + 1));
    auto episodes = rollout(mdp, agent, sc, cfg);
    out.push_back(
        detail::summarize(to_string(kinds[i]), episodes, cfg.discounted));
  }
  return out;
}

// Normalized score (v - low) / |target - low|; anchors the low reference at
// 0 and the target reference at 1.
inline double normalize_score(double v, double ref_low, double ref_target) {
  double denom = std::abs(ref_target - ref_low);
  if (denom <= 1e-12)
    throw NumericalError("normalize_score: degenerate reference scores");
  return (v - ref_low) / denom;
}

}  // namespace tcmdp
