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

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "tcmdp/envs.hpp"
#include "tcmdp/operators.hpp"
#include "tcmdp/random_instances.hpp"

using namespace tcmdp;

namespace {

ParametricMdp small_random(Rng& rng, int max_states = 2, int max_actions = 2,
                           int points = 3) {
  RandomInstanceOptions opts;
  opts.max_states = max_states;
  opts.max_actions = max_actions;
  opts.max_dims = 1;
  opts.max_points = points;
  return random_mdp(rng, opts);
}

}  // namespace

TEST_CASE("standard backup basics") {
  ChainConfig cfg;
  cfg.gamma = 0.0;
  ParameterGrid grid(1, 5);
  ParametricMdp chain0 = build_chain(cfg, grid);

  ValueField v = ValueField::state_only(4, 3.0);
  ValueField out = standard_backup(v, chain0, 2);
  for (int s = 0; s < 4; ++s)
    REQUIRE(out.at(s) == Catch::Approx(s == 3 ? 1.0 : 0.0));  // max_a r(s,a)

  cfg.gamma = 0.9;
  ParametricMdp chain = build_chain(cfg, grid);
  // constant field: v'(s) = max_a r(s,a) + gamma * c
  ValueField c = ValueField::state_only(4, 2.5);
  out = standard_backup(c, chain, 3);
  for (int s = 0; s < 4; ++s)
    REQUIRE(out.at(s) ==
            Catch::Approx((s == 3 ? 1.0 : 0.0) + 0.9 * 2.5).margin(1e-12));

  // a converged iterate is a fixed point of one more application
  ValueField fp = ValueField::state_only(4);
  for (int i = 0; i < 400; ++i) fp = standard_backup(fp, chain, 4);
  ValueField again = standard_backup(fp, chain, 4);
  REQUIRE(max_abs_diff(fp, again) <= 1e-9);
}

TEST_CASE("rect robust backup") {
  // kernel family constant in psi: degenerate uncertainty, backup equals the
  // standard backup at any node
  ChainConfig cfg;
  cfg.success_prob = [](std::span<const double>) { return 0.7; };
  ParameterGrid grid(1, 5);
  ParametricMdp flat = build_chain(cfg, grid);
  Rng rng(3);
  ValueField v = random_field(rng, FieldKind::StateOnly, flat);
  REQUIRE(max_abs_diff(rect_robust_backup(v, flat),
                       standard_backup(v, flat, 2)) <= 1e-12);

  // gamma = 0: adversary irrelevant, the backup is max_a r(s,a)
  ChainConfig zero;
  zero.gamma = 0.0;
  ParametricMdp chain0 = build_chain(zero, grid);
  ValueField out = rect_robust_backup(v, chain0);
  for (int s = 0; s < 4; ++s)
    REQUIRE(out.at(s) == Catch::Approx(s == 3 ? 1.0 : 0.0));

  // random tiny instances against the exhaustive max-min enumeration
  for (int trial = 0; trial < 30; ++trial) {
    ParametricMdp mdp = small_random(rng, 3, 3, 4);
    ValueField field = random_field(rng, FieldKind::StateOnly, mdp);
    ValueField got = rect_robust_backup(field, mdp);
    for (int s = 0; s < mdp.n_states(); ++s)
      REQUIRE(got.at(s) ==
              Catch::Approx(test_oracle::rect_cell(mdp, s, field.slice(0)))
                  .margin(1e-12));
  }
}

TEST_CASE("param robust backup") {
  Rng rng(5);
  // pure <= mixed per state
  for (int trial = 0; trial < 20; ++trial) {
    ParametricMdp mdp = small_random(rng, 4, 3, 4);
    ValueField v = random_field(rng, FieldKind::StateOnly, mdp);
    ValueField pure = param_robust_backup(v, mdp, BackupMode::PureActions);
    ValueField mixed = param_robust_backup(v, mdp, BackupMode::MixedExact);
    for (int s = 0; s < mdp.n_states(); ++s)
      REQUIRE(pure.at(s) <= mixed.at(s) + 1e-9);
  }

  // one action: both modes collapse to min over grid points
  RandomInstanceOptions opts;
  opts.max_states = 3;
  opts.max_actions = 1;
  opts.max_dims = 1;
  ParametricMdp single = random_mdp(rng, opts);
  ValueField v = random_field(rng, FieldKind::StateOnly, single);
  ValueField pure = param_robust_backup(v, single, BackupMode::PureActions);
  ValueField mixed = param_robust_backup(v, single, BackupMode::MixedExact);
  for (int s = 0; s < single.n_states(); ++s) {
    double worst = std::numeric_limits<double>::infinity();
    for (int psi = 0; psi < single.grid().size(); ++psi)
      worst = std::min(
          worst, test_oracle::one_step_payoff(single, s, 0, psi, v.slice(0)));
    REQUIRE(pure.at(s) == Catch::Approx(worst).margin(1e-12));
    REQUIRE(mixed.at(s) == Catch::Approx(worst).margin(1e-9));
  }

  // chain: 2 x |grid| games against the closed-form envelope oracle
  ChainConfig cfg;
  ParameterGrid grid(1, 3);
  ParametricMdp chain = build_chain(cfg, grid);
  ValueField field = random_field(rng, FieldKind::StateOnly, chain);
  ValueField got = param_robust_backup(field, chain, BackupMode::MixedExact);
  for (int s = 0; s < chain.n_states(); ++s) {
    std::vector<double> payoff(2 * grid.size());
    for (int a = 0; a < 2; ++a)
      for (int psi = 0; psi < grid.size(); ++psi)
        payoff[a * grid.size() + psi] =
            test_oracle::one_step_payoff(chain, s, a, psi, field.slice(0));
    REQUIRE(got.at(s) ==
            Catch::Approx(test_oracle::two_row_value(payoff, grid.size()))
                .margin(1e-9));
  }
}

TEST_CASE("tc optimal backup limits") {
  Rng rng(9);
  ParametricMdp mdp = small_random(rng, 4, 3, 4);
  ValueField v = random_field(rng, FieldKind::Augmented, mdp);

  // frozen adversary: per grid point the backup equals the standard backup of
  // that point's slice
  ValueField frozen = tc_backup_optimal(v, mdp, StepBall(0),
                                        BackupMode::MixedExact);
  for (int psi = 0; psi < mdp.grid().size(); ++psi) {
    ValueField slice = ValueField::state_only(mdp.n_states());
    for (int s = 0; s < mdp.n_states(); ++s) slice.at(s) = v.at(s, psi);
    ValueField expected = standard_backup(slice, mdp, psi);
    for (int s = 0; s < mdp.n_states(); ++s)
      REQUIRE(frozen.at(s, psi) == Catch::Approx(expected.at(s)).margin(1e-9));
  }

  // full-reach adversary on a psi-constant field equals the parametric backup
  ValueField constant = ValueField::augmented(mdp.n_states(), mdp.grid().size());
  ValueField state_part = random_field(rng, FieldKind::StateOnly, mdp);
  for (int psi = 0; psi < mdp.grid().size(); ++psi)
    for (int s = 0; s < mdp.n_states(); ++s)
      constant.at(s, psi) = state_part.at(s);
  StepBall full(mdp.grid().points_per_dim() - 1);
  ValueField reach = tc_backup_optimal(constant, mdp, full,
                                       BackupMode::MixedExact);
  ValueField param = param_robust_backup(state_part, mdp,
                                         BackupMode::MixedExact);
  for (int psi = 0; psi < mdp.grid().size(); ++psi)
    for (int s = 0; s < mdp.n_states(); ++s)
      REQUIRE(reach.at(s, psi) == Catch::Approx(param.at(s)).margin(1e-9));
}

TEST_CASE("tc optimal backup against pairwise enumeration") {
  Rng rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    ParametricMdp mdp = small_random(rng, 2, 2, 3);
    StepBall ball(1);
    ValueField v = random_field(rng, FieldKind::Augmented, mdp);
    ValueField mixed = tc_backup_optimal(v, mdp, ball, BackupMode::MixedExact);
    ValueField pure = tc_backup_optimal(v, mdp, ball, BackupMode::PureActions);
    for (int psi = 0; psi < mdp.grid().size(); ++psi)
      for (int s = 0; s < mdp.n_states(); ++s) {
        int cols = 0;
        std::vector<double> payoff =
            test_oracle::tc_cell_payoff(mdp, ball, s, psi, v, &cols);
        REQUIRE(pure.at(s, psi) ==
                Catch::Approx(
                    test_oracle::pure_value(payoff, mdp.n_actions(), cols))
                    .margin(1e-12));
        REQUIRE(mixed.at(s, psi) ==
                Catch::Approx(test_oracle::small_game_value(
                                  payoff, mdp.n_actions(), cols))
                    .margin(1e-9));
      }
  }
}

TEST_CASE("tc policy backup") {
  Rng rng(17);
  ChainConfig cfg;
  ParameterGrid grid(1, 5);
  ParametricMdp chain = build_chain(cfg, grid);

  // deterministic policy, frozen ball: plain policy-evaluation backup per node
  PolicyTable pi = PolicyTable::uniform(ObservationClass::Oracle, chain);
  for (int s = 0; s < 4; ++s)
    for (int psi = 0; psi < grid.size(); ++psi)
      pi.set_deterministic(pi.oracle_key(s, psi), 1);
  ValueField v = random_field(rng, FieldKind::Augmented, chain);
  ValueField out = tc_backup_policy(v, pi, chain, StepBall(0));
  for (int psi = 0; psi < grid.size(); ++psi)
    for (int s = 0; s < 4; ++s)
      REQUIRE(out.at(s, psi) ==
              Catch::Approx(test_oracle::one_step_payoff(chain, s, 1, psi,
                                                         v.slice(psi)))
                  .margin(1e-12));

  // exhaustive min over displacements per cell under a mixed policy
  PolicyTable mixed = random_policy(rng, ObservationClass::Oracle, chain);
  StepBall ball(1);
  ValueField got = tc_backup_policy(v, mixed, chain, ball);
  auto displacements = ball.displacements(1);
  for (int psi = 0; psi < grid.size(); ++psi)
    for (int s = 0; s < 4; ++s) {
      double worst = std::numeric_limits<double>::infinity();
      for (const auto& b : displacements) {
        int next = apply_step(psi, b, ball, grid);
        double e = 0.0;
        auto row = mixed.row(mixed.oracle_key(s, psi));
        for (int a = 0; a < 2; ++a)
          e += row[a] *
               test_oracle::one_step_payoff(chain, s, a, next, v.slice(next));
        worst = std::min(worst, e);
      }
      REQUIRE(got.at(s, psi) == Catch::Approx(worst).margin(1e-12));
    }

  // wrong observation class is rejected
  PolicyTable vanilla = PolicyTable::uniform(ObservationClass::Vanilla, chain);
  REQUIRE_THROWS_AS(tc_backup_policy(v, vanilla, chain, ball), ContractError);

  // a single-action model is independent of the policy representation
  RandomInstanceOptions opts;
  opts.max_states = 3;
  opts.max_actions = 1;
  opts.max_dims = 1;
  ParametricMdp single = random_mdp(rng, opts);
  ValueField vs = random_field(rng, FieldKind::Augmented, single);
  PolicyTable only = PolicyTable::uniform(ObservationClass::Oracle, single);
  ValueField via_policy = tc_backup_policy(vs, only, single, ball);
  ValueField via_optimal =
      tc_backup_optimal(vs, single, ball, BackupMode::MixedExact);
  REQUIRE(max_abs_diff(via_policy, via_optimal) <= 1e-9);
}

TEST_CASE("operator properties: contraction, monotonicity, constant shift") {
  Rng rng(23);
  for (int trial = 0; trial < 8; ++trial) {
    ParametricMdp mdp = random_mdp(rng);
    double gamma = mdp.gamma();
    StepBall ball(rng.uniform_int(3));
    PolicyTable pi = random_policy(rng, ObservationClass::Oracle, mdp);
    for (int pair = 0; pair < 5; ++pair) {
      ValueField s1 = random_field(rng, FieldKind::StateOnly, mdp);
      ValueField s2 = random_field(rng, FieldKind::StateOnly, mdp);
      ValueField a1 = random_field(rng, FieldKind::Augmented, mdp);
      ValueField a2 = random_field(rng, FieldKind::Augmented, mdp);

      REQUIRE(max_abs_diff(rect_robust_backup(s1, mdp),
                           rect_robust_backup(s2, mdp)) <=
              gamma * max_abs_diff(s1, s2) + 1e-9);
      REQUIRE(max_abs_diff(
                  param_robust_backup(s1, mdp, BackupMode::MixedExact),
                  param_robust_backup(s2, mdp, BackupMode::MixedExact)) <=
              gamma * max_abs_diff(s1, s2) + 1e-9);
      REQUIRE(max_abs_diff(
                  tc_backup_optimal(a1, mdp, ball, BackupMode::MixedExact),
                  tc_backup_optimal(a2, mdp, ball, BackupMode::MixedExact)) <=
              gamma * max_abs_diff(a1, a2) + 1e-9);
      REQUIRE(max_abs_diff(tc_backup_policy(a1, pi, mdp, ball),
                           tc_backup_policy(a2, pi, mdp, ball)) <=
              gamma * max_abs_diff(a1, a2) + 1e-9);

      // monotonicity
      ValueField above = a1;
      for (double& x : above.data()) x += rng.uniform(0.0, 2.0);
      ValueField lo = tc_backup_optimal(a1, mdp, ball, BackupMode::MixedExact);
      ValueField hi =
          tc_backup_optimal(above, mdp, ball, BackupMode::MixedExact);
      for (std::size_t i = 0; i < lo.data().size(); ++i)
        REQUIRE(lo.data()[i] <= hi.data()[i] + 1e-9);

      // constant shift
      double c = rng.uniform(-2.0, 2.0);
      ValueField shifted = a1;
      for (double& x : shifted.data()) x += c;
      ValueField ts =
          tc_backup_optimal(shifted, mdp, ball, BackupMode::MixedExact);
      for (std::size_t i = 0; i < lo.data().size(); ++i)
        REQUIRE(ts.data()[i] - lo.data()[i] ==
                Catch::Approx(gamma * c).margin(1e-9));
    }
  }
}

TEST_CASE("backups reject malformed inputs") {
  Rng rng(29);
  ParametricMdp mdp = small_random(rng);
  ValueField aug = ValueField::augmented(mdp.n_states(), mdp.grid().size());
  ValueField state = ValueField::state_only(mdp.n_states());
  REQUIRE_THROWS_AS(standard_backup(aug, mdp, 0), ContractError);
  REQUIRE_THROWS_AS(rect_robust_backup(aug, mdp), ContractError);
  REQUIRE_THROWS_AS(tc_backup_optimal(state, mdp, StepBall(1),
                                      BackupMode::MixedExact),
                    ContractError);
  ValueField bad = state;
  bad.at(0) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(rect_robust_backup(bad, mdp), ContractError);
}
