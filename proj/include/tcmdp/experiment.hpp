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

#include <iostream>

#include "tcmdp/config.hpp"
#include "tcmdp/io.hpp"
#include "tcmdp/random_instances.hpp"
#include "tcmdp/theory.hpp"

namespace tcmdp {

// Config-driven experiment commands. Every command writes results.csv,
// summary.json and report.json into the output directory; outputs are
// byte-identical across reruns of the same config and seeds (wall-clock
// timings are reported on the console only, never in files).

namespace detail {

inline Json solve_report_json(const SolveReport& r) {
  return Json{{"iterations", r.iterations},
              {"final_residual", r.final_residual},
              {"epsilon", r.epsilon},
              {"mode", to_string(r.mode)},
              {"converged", r.converged},
              {"residuals", r.residuals}};
}

inline Json summary_base(const ExperimentConfig& cfg, const char* command) {
  return Json{{"command", command},
              {"config_hash", hash_hex(cfg.config_hash)},
              {"seeds", cfg.seeds}};
}

inline SolveOptions solve_options(const ExperimentConfig& cfg, int workers) {
  SolveOptions opts;
  opts.epsilon = cfg.solver_epsilon;
  opts.max_iters = cfg.solver_max_iters;
  opts.workers = workers;
  opts.mode = cfg.solver_mode;
  return opts;
}

inline void emit_error(const std::exception& err, const char* command,
                       const std::filesystem::path& out) {
  Json j{{"command", command}, {"error", err.what()}};
  std::cerr << j.dump() << "\n";
  try {
    write_json(out / "error.json", j);
  } catch (...) {
  }
}

struct AgentSpec {
  std::string name;
  PolicyTable policy;
};

// Builds the requested comparison agents from exact solves.
inline std::vector<AgentSpec> build_agents(const ExperimentConfig& cfg,
                                           const ParametricMdp& mdp,
                                           const StepBall& ball,
                                           const SolveOptions& opts,
                                           const std::vector<std::string>& names) {
  std::vector<AgentSpec> agents;
  for (const auto& name : names) {
    if (name == "tc") {
      SolveResult solved = solve_tc_optimal(mdp, ball, opts);
      agents.push_back(
          {name, extract_oracle_policy(solved.value, mdp, ball, opts.mode,
                                       opts.workers)
                     .agent});
    } else if (name == "rect") {
      SolveResult solved = solve_rect_robust(mdp, opts);
      agents.push_back({name, extract_rect_policy(solved.value, mdp)});
    } else if (name == "param") {
      SolveResult solved = solve_param_robust(mdp, opts);
      agents.push_back({name, extract_param_policy(solved.value, mdp, opts.mode)});
    } else if (name == "nominal") {
      int psi = cfg.nominal_psi(mdp.grid());
      SolveResult solved = solve_nominal(mdp, psi, opts);
      agents.push_back({name, extract_nominal_policy(solved.value, mdp, psi)});
    } else {
      throw ConfigError("unknown eval agent: " + name);
    }
  }
  return agents;
}

}  // namespace detail

// Fixed point and greedy policies for the configured operator family.
inline int cmd_solve(const ExperimentConfig& cfg,
                     const std::filesystem::path& out, int workers = 1,
                     bool verbose = false) {
  try {
    ParametricMdp mdp = cfg.build_env();
    StepBall ball = cfg.build_ball(mdp.grid());
    SolveOptions opts = detail::solve_options(cfg, workers);

    SolveResult solved = [&] {
      if (cfg.solver_operator == "tc") return solve_tc_optimal(mdp, ball, opts);
      if (cfg.solver_operator == "param") return solve_param_robust(mdp, opts);
      if (cfg.solver_operator == "rect") return solve_rect_robust(mdp, opts);
      return solve_nominal(mdp, cfg.nominal_psi(mdp.grid()), opts);
    }();

    write_value_field_csv(out / "results.csv", solved.value);
    if (cfg.solver_operator == "tc") {
      OraclePolicyPair pair = extract_oracle_policy(solved.value, mdp, ball,
                                                    opts.mode, workers);
      write_policy_csv(out / "policy.csv", pair.agent);
      write_policy_csv(out / "adversary.csv", pair.adversary);
    } else if (cfg.solver_operator == "param") {
      write_policy_csv(out / "policy.csv",
                       extract_param_policy(solved.value, mdp, opts.mode));
    } else if (cfg.solver_operator == "rect") {
      write_policy_csv(out / "policy.csv",
                       extract_rect_policy(solved.value, mdp));
    } else {
      write_policy_csv(out / "policy.csv",
                       extract_nominal_policy(solved.value, mdp,
                                              cfg.nominal_psi(mdp.grid())));
    }

    // Model dump for cross-checking; skipped for very large kernel tables.
    std::size_t entries = static_cast<std::size_t>(mdp.grid().size()) *
                          mdp.n_states() * mdp.n_actions() * mdp.n_states();
    if (entries <= 500000) write_json(out / "model.json", model_to_json(mdp));

    Json report = detail::summary_base(cfg, "solve");
    report["operator"] = cfg.solver_operator;
    report["solve"] = detail::solve_report_json(solved.report);
    write_json(out / "report.json", report);

    Json summary = detail::summary_base(cfg, "solve");
    summary["operator"] = cfg.solver_operator;
    summary["mode"] = to_string(opts.mode);
    summary["iterations"] = solved.report.iterations;
    summary["final_residual"] = solved.report.final_residual;
    double lo = solved.value.data()[0], hi = lo;
    for (double v : solved.value.data()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    summary["value_min"] = lo;
    summary["value_max"] = hi;
    write_json(out / "summary.json", summary);
    if (verbose)
      std::cout << "solve: " << solved.report.iterations << " iterations, "
                << solved.report.wall_time_s << " s\n";
    return 0;
  } catch (const std::exception& err) {
    detail::emit_error(err, "solve", out);
    return 1;
  }
}

// Alternating best-response training for the configured observation classes.
// Classes train in the listed order; a stacked trainer starts from the lifted
// vanilla result when vanilla trained first.
inline int cmd_train(const ExperimentConfig& cfg,
                     const std::filesystem::path& out, int workers = 1,
                     bool verbose = false) {
  try {
    ParametricMdp mdp = cfg.build_env();
    StepBall ball = cfg.build_ball(mdp.grid());
    TrainOptions opts;
    opts.rounds = cfg.solver_rounds;
    opts.epsilon = cfg.solver_epsilon;
    opts.max_iters = cfg.solver_max_iters;
    opts.workers = workers;

    CsvWriter results({"class", "round", "worst_case_value"});
    Json traces = Json::object();
    std::optional<PolicyTable> vanilla_best;
    for (ObservationClass cls : cfg.train_classes) {
      std::optional<PolicyTable> init;
      if (cls == ObservationClass::Stacked && vanilla_best)
        init = PolicyTable::lift(*vanilla_best, ObservationClass::Stacked, mdp);
      TrainResult trained = alternating_train(
          cls, mdp, ball, opts, init ? &*init : nullptr);
      if (cls == ObservationClass::Vanilla) vanilla_best = trained.agent;

      write_policy_csv(out / ("policy_" + std::string(to_string(cls)) + ".csv"),
                       trained.agent);
      for (std::size_t r = 0; r < trained.round_scores.size(); ++r)
        results.append_row({to_string(cls), std::to_string(r),
                            format_double(trained.round_scores[r])});
      traces[to_string(cls)] = Json{{"round_scores", trained.round_scores},
                                    {"best_score", trained.best_score},
                                    {"best_round", trained.best_round}};
      if (verbose)
        std::cout << "train " << to_string(cls) << ": best "
                  << trained.best_score << " at round " << trained.best_round
                  << "\n";
    }
    results.save(out / "results.csv");

    Json report = detail::summary_base(cfg, "train");
    report["traces"] = traces;
    write_json(out / "report.json", report);
    Json summary = detail::summary_base(cfg, "train");
    summary["rounds"] = cfg.solver_rounds;
    summary["traces"] = traces;
    write_json(out / "summary.json", summary);
    return 0;
  } catch (const std::exception& err) {
    detail::emit_error(err, "train", out);
    return 1;
  }
}

// Evaluation protocols over the configured agents: worst-case time-constrained
// adversary, static grid, fixed-schedule sweep. Scores are normalized against
// the nominal-trained (low) and rectangular-robust (target) reference agents,
// unless explicit references are configured.
inline int cmd_eval(const ExperimentConfig& cfg,
                    const std::filesystem::path& out, int workers = 1,
                    bool verbose = false) {
  try {
    ParametricMdp mdp = cfg.build_env();
    StepBall ball = cfg.build_ball(mdp.grid());
    SolveOptions opts = detail::solve_options(cfg, workers);

    // Reference agents are always evaluated so scores can be normalized.
    std::vector<std::string> names = cfg.eval_agents;
    for (const char* ref : {"nominal", "rect"})
      if (std::find(names.begin(), names.end(), ref) == names.end())
        names.push_back(ref);
    std::vector<detail::AgentSpec> agents =
        detail::build_agents(cfg, mdp, ball, opts, names);

    // score[condition][agent] = mean over seeds of the per-seed protocol mean
    std::map<std::string, std::map<std::string, std::vector<double>>> scores;
    Json report = detail::summary_base(cfg, "eval");
    Json details = Json::object();

    for (const auto& agent : agents) {
      Json agent_detail = Json::object();
      for (const auto& protocol : cfg.eval_protocols) {
        if (protocol == "tc_worst") {
          StepBall eval_ball = StepBall::from_radius(cfg.eval_radius, mdp.grid());
          BestResponseResult br =
              adversary_best_response(agent.policy, mdp, eval_ball, opts);
          for (std::uint64_t seed : cfg.seeds) {
            RolloutConfig rc{cfg.eval_horizon, cfg.eval_episodes, seed,
                             cfg.eval_discounted, -1};
            auto episodes = rollout(mdp, agent.policy, br.adversary, eval_ball, rc);
            scores["tc_worst"][agent.name].push_back(
                detail::summarize("tc_worst", episodes, cfg.eval_discounted)
                    .mean);
          }
          double dp_worst = std::numeric_limits<double>::infinity();
          for (int s = 0; s < mdp.n_states(); ++s)
            dp_worst = std::min(dp_worst, br.worst_start_value(s));
          agent_detail["tc_worst"] = {
              {"dp_min_start_value", br.min_start_value()},
              {"dp_worst_by_state", dp_worst},
              {"adversary_iterations", br.report.iterations}};
        } else if (protocol == "static") {
          Json point_table = Json::array();
          for (std::uint64_t seed : cfg.seeds) {
            RolloutConfig rc{cfg.eval_horizon, cfg.eval_episodes, seed,
                             cfg.eval_discounted, -1};
            StaticGridResult grid_result =
                static_grid_eval(agent.policy, mdp, cfg.eval_segments, rc);
            scores["static_worst"][agent.name].push_back(grid_result.worst_case);
            scores["static_average"][agent.name].push_back(grid_result.average);
            if (seed == cfg.seeds.front())
              for (const auto& p : grid_result.points)
                point_table.push_back(
                    Json{{"psi", p.psi}, {"mean", p.mean}, {"sd", p.sd}});
          }
          agent_detail["static_points"] = point_table;
        } else if (protocol == "schedules") {
          for (std::uint64_t seed : cfg.seeds) {
            RolloutConfig rc{cfg.eval_horizon, cfg.eval_episodes, seed,
                             cfg.eval_discounted, -1};
            auto sweep = schedule_sweep(agent.policy, mdp,
                                        cfg.eval_schedule_kinds,
                                        cfg.eval_schedule_radius, rc);
            for (const auto& res : sweep)
              scores["schedule_" + res.condition][agent.name].push_back(
                  res.mean);
          }
        }
      }
      details[agent.name] = agent_detail;
    }

    // Normalization references per condition.
    CsvWriter results(
        {"agent", "condition", "mean", "sd_across_seeds", "normalized"});
    Json summary_scores = Json::object();
    for (const auto& [condition, by_agent] : scores) {
      auto mean_of = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        return m / v.size();
      };
      double low = cfg.ref_low ? *cfg.ref_low : mean_of(by_agent.at("nominal"));
      double target =
          cfg.ref_target ? *cfg.ref_target : mean_of(by_agent.at("rect"));
      for (const auto& agent : agents) {
        const auto& per_seed = by_agent.at(agent.name);
        double mean = mean_of(per_seed);
        double ss = 0.0;
        for (double v : per_seed) ss += (v - mean) * (v - mean);
        double sd = per_seed.size() > 1
                        ? std::sqrt(ss / (per_seed.size() - 1))
                        : 0.0;
        std::string normalized;
        if (std::abs(target - low) > 1e-12)
          normalized = format_double(normalize_score(mean, low, target));
        results.append_row({agent.name, condition, format_double(mean),
                            format_double(sd), normalized});
        summary_scores[condition][agent.name] = mean;
      }
    }
    results.save(out / "results.csv");

    // Optional fixed-schedule trajectory export.
    if (cfg.schedule) {
      Schedule schedule(*cfg.schedule);
      std::vector<double> psi = schedule.init();
      std::vector<std::string> header = {"t"};
      for (int i = 0; i < cfg.schedule->dims; ++i)
        header.push_back("psi_" + std::to_string(i));
      CsvWriter trajectory(header);
      for (int t = 0; t <= cfg.schedule->horizon; ++t) {
        if (t > 0) psi = schedule.step(t, psi);
        std::vector<std::string> row = {std::to_string(t)};
        for (double v : psi) row.push_back(format_double(v));
        trajectory.append_row(row);
      }
      trajectory.save(out / "schedule_trajectory.csv");
    }

    report["agents"] = details;
    write_json(out / "report.json", report);
    Json summary = detail::summary_base(cfg, "eval");
    summary["scores"] = summary_scores;
    write_json(out / "summary.json", summary);
    if (verbose) std::cout << "eval: wrote " << (out / "results.csv") << "\n";
    return 0;
  } catch (const std::exception& err) {
    detail::emit_error(err, "eval", out);
    return 1;
  }
}

// Property sweeps: operator contraction / monotonicity / constant shift on
// random instances, the frozen and full-reach limit identities, and the
// smoothness suite on drift-bounded chain sequences. Exits nonzero if any
// check fails.
inline int cmd_check(const ExperimentConfig& cfg,
                     const std::filesystem::path& out, int workers = 1,
                     bool verbose = false) {
  try {
    CsvWriter results({"check", "pass", "detail"});
    Json report = detail::summary_base(cfg, "check");
    bool all_pass = true;
    std::uint64_t seed = cfg.seeds.front();

    // --- operator properties on random instances
    double worst_contraction = -1e300;
    double worst_monotone = -1e300;
    double worst_shift = -1e300;
    Rng rng = Rng::stream(seed, 0xc0de);
    for (int inst = 0; inst < cfg.check_instances; ++inst) {
      ParametricMdp mdp = random_mdp(rng);
      StepBall ball(rng.uniform_int(3));
      PolicyTable oracle_pi = random_policy(rng, ObservationClass::Oracle, mdp);
      double gamma = mdp.gamma();
      for (int pair = 0; pair < cfg.check_value_pairs; ++pair) {
        ValueField s1 = random_field(rng, FieldKind::StateOnly, mdp);
        ValueField s2 = random_field(rng, FieldKind::StateOnly, mdp);
        ValueField a1 = random_field(rng, FieldKind::Augmented, mdp);
        ValueField a2 = random_field(rng, FieldKind::Augmented, mdp);
        int psi = rng.uniform_int(mdp.grid().size());
        double c = rng.uniform(-2.0, 2.0);

        auto gap_state = [&](auto&& op) {
          double lhs = max_abs_diff(op(s1), op(s2));
          return lhs - gamma * max_abs_diff(s1, s2);
        };
        auto gap_aug = [&](auto&& op) {
          double lhs = max_abs_diff(op(a1), op(a2));
          return lhs - gamma * max_abs_diff(a1, a2);
        };
        worst_contraction = std::max(
            {worst_contraction,
             gap_state([&](const ValueField& v) {
               return standard_backup(v, mdp, psi);
             }),
             gap_state([&](const ValueField& v) {
               return rect_robust_backup(v, mdp, workers);
             }),
             gap_state([&](const ValueField& v) {
               return param_robust_backup(v, mdp, BackupMode::MixedExact,
                                          workers);
             }),
             gap_state([&](const ValueField& v) {
               return param_robust_backup(v, mdp, BackupMode::PureActions,
                                          workers);
             }),
             gap_aug([&](const ValueField& v) {
               return tc_backup_optimal(v, mdp, ball, BackupMode::MixedExact,
                                        workers);
             }),
             gap_aug([&](const ValueField& v) {
               return tc_backup_optimal(v, mdp, ball, BackupMode::PureActions,
                                        workers);
             }),
             gap_aug([&](const ValueField& v) {
               return tc_backup_policy(v, oracle_pi, mdp, ball, workers);
             })});

        // monotonicity and constant shift, spot checks on the TC operator
        ValueField above = a1;
        for (int i = 0; i < static_cast<int>(above.data().size()); ++i)
          above.data()[i] += rng.uniform(0.0, 3.0);
        ValueField t_lo =
            tc_backup_optimal(a1, mdp, ball, BackupMode::MixedExact, workers);
        ValueField t_hi = tc_backup_optimal(above, mdp, ball,
                                            BackupMode::MixedExact, workers);
        for (int i = 0; i < static_cast<int>(t_lo.data().size()); ++i)
          worst_monotone =
              std::max(worst_monotone, t_lo.data()[i] - t_hi.data()[i]);

        ValueField shifted = a1;
        for (double& v : shifted.data()) v += c;
        ValueField t_shift = tc_backup_optimal(shifted, mdp, ball,
                                               BackupMode::MixedExact, workers);
        for (int i = 0; i < static_cast<int>(t_lo.data().size()); ++i)
          worst_shift = std::max(
              worst_shift,
              std::abs(t_shift.data()[i] - t_lo.data()[i] - gamma * c));
      }
    }
    bool contraction_ok = worst_contraction <= 1e-9;
    bool monotone_ok = worst_monotone <= 1e-9;
    bool shift_ok = worst_shift <= 1e-9;
    all_pass = all_pass && contraction_ok && monotone_ok && shift_ok;
    results.append_row({"contraction", contraction_ok ? "1" : "0",
                        format_double(worst_contraction)});
    results.append_row(
        {"monotonicity", monotone_ok ? "1" : "0", format_double(worst_monotone)});
    results.append_row(
        {"constant_shift", shift_ok ? "1" : "0", format_double(worst_shift)});
    report["contraction_margin"] = worst_contraction;
    report["monotonicity_margin"] = worst_monotone;
    report["constant_shift_margin"] = worst_shift;

    // --- limit identities
    double frozen_gap = 0.0;
    double full_reach_gap = 0.0;
    {
      Rng lim_rng = Rng::stream(seed, 0x11f);
      for (int inst = 0; inst < 3; ++inst) {
        RandomInstanceOptions small;
        small.max_states = 5;
        small.max_actions = 3;
        small.max_dims = 1;
        small.max_points = 5;
        ParametricMdp mdp = random_mdp(lim_rng, small);
        SolveOptions opts;
        opts.epsilon = 1e-9;
        opts.workers = workers;
        ValueField tc0 = solve_tc_optimal(mdp, StepBall(0), opts).value;
        for (int psi = 0; psi < mdp.grid().size(); ++psi) {
          ValueField nominal = solve_nominal(mdp, psi, opts).value;
          for (int s = 0; s < mdp.n_states(); ++s)
            frozen_gap =
                std::max(frozen_gap, std::abs(tc0.at(s, psi) - nominal.at(s)));
        }
        StepBall full(mdp.grid().points_per_dim() - 1);
        ValueField tc_full = solve_tc_optimal(mdp, full, opts).value;
        ValueField param = solve_param_robust(mdp, opts).value;
        for (int s = 0; s < mdp.n_states(); ++s) {
          double worst = std::numeric_limits<double>::infinity();
          for (int psi = 0; psi < mdp.grid().size(); ++psi)
            worst = std::min(worst, tc_full.at(s, psi));
          full_reach_gap = std::max(full_reach_gap, std::abs(worst - param.at(s)));
        }
      }
    }
    bool limits_ok = frozen_gap <= 1e-6 && full_reach_gap <= 1e-6;
    all_pass = all_pass && limits_ok;
    results.append_row({"limit_identities", limits_ok ? "1" : "0",
                        format_double(std::max(frozen_gap, full_reach_gap))});
    report["frozen_ball_gap"] = frozen_gap;
    report["full_reach_gap"] = full_reach_gap;

    // --- smoothness suite on drift-bounded chain sequences
    {
      ChainConfig chain_cfg;
      chain_cfg.n_states = 4;
      ParameterGrid grid(1, 11);
      ParametricMdp chain = build_chain(chain_cfg, grid);
      int goal = chain_cfg.n_states - 1;
      PsiRewardFn reward_fn = [goal](int s, int, std::span<const double> psi) {
        return s == goal ? 0.5 + 0.5 * psi[0] : 0.0;
      };
      DriftFamily family{&chain, StepBall(1), 5, reward_fn, {}};

      bool smooth_ok = true;
      double worst_margin = -1e300;
      double worst_occupancy = 0.0;
      Rng seq_rng = Rng::stream(seed, 0x7e0);
      for (int i = 0; i < cfg.check_sequences; ++i) {
        PolicyTable pi = random_policy(seq_rng, ObservationClass::Vanilla, chain);
        ScheduleConfig sc;
        sc.kind = all_schedule_kinds()[i % all_schedule_kinds().size()];
        sc.dims = 1;
        sc.radius = 0.1;
        sc.horizon = 30;
        sc.seed = seq_rng.next_u64();
        Schedule schedule(sc);
        std::vector<std::vector<double>> trajectory = {schedule.init()};
        for (int t = 1; t <= 20; ++t)
          trajectory.push_back(schedule.step(t, trajectory.back()));
        if (!cfg.check_inject.empty() && i == 0) {
          // deliberately corrupted sequence: drift beyond the declared bound
          trajectory[5][0] = trajectory[4][0] > 0.5 ? 0.0 : 1.0;
        }
        MdpSequence seq = sequence_from_trajectory(chain, trajectory, reward_fn);
        if (!cfg.check_inject.empty() && i == 0) {
          seq.kernel_bound = 0.2;  // true step drift is larger; must be caught
          seq.reward_bound = 0.1;
        }
        LipschitzCheckResult check = lipschitz_bound_check(
            pi, family, seq, i % 3, 1 + i % 4, 400);
        smooth_ok = smooth_ok && check.holds;
        worst_margin = std::max(worst_margin, check.lhs - check.rhs);
        for (const auto& gap : check.one_step)
          worst_margin = std::max(worst_margin, gap.gap - gap.bound);

        std::vector<double> start(chain.n_states(), 1.0 / chain.n_states());
        double identity = std::abs(
            return_via_occupancy(pi, seq.steps.front(), start) -
            policy_evaluation_value(pi, seq.steps.front(), start));
        worst_occupancy = std::max(worst_occupancy, identity);
      }
      bool occupancy_ok = worst_occupancy <= 1e-8;
      all_pass = all_pass && smooth_ok && occupancy_ok;
      results.append_row(
          {"lipschitz_bounds", smooth_ok ? "1" : "0", format_double(worst_margin)});
      results.append_row({"occupancy_identity", occupancy_ok ? "1" : "0",
                          format_double(worst_occupancy)});
      report["lipschitz_margin"] = worst_margin;
      report["occupancy_identity_gap"] = worst_occupancy;
    }

    results.save(out / "results.csv");
    report["all_pass"] = all_pass;
    write_json(out / "report.json", report);
    Json summary = detail::summary_base(cfg, "check");
    summary["all_pass"] = all_pass;
    write_json(out / "summary.json", summary);
    if (verbose) std::cout << "check: " << (all_pass ? "pass" : "FAIL") << "\n";
    return all_pass ? 0 : 2;
  } catch (const std::exception& err) {
    detail::emit_error(err, "check", out);
    return 1;
  }
}

}  // namespace tcmdp
