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
#include <numbers>

#include "tcmdp/envs.hpp"
#include "tcmdp/random_instances.hpp"

using namespace tcmdp;

TEST_CASE("parameter grid lattice") {
  ParameterGrid grid(2, 11);
  REQUIRE(grid.size() == 121);
  REQUIRE(grid.spacing() == Catch::Approx(0.1));
  for (int flat = 0; flat < grid.size(); ++flat) {
    auto p = grid.point(flat);
    for (double x : p) {
      REQUIRE(x >= 0.0);
      REQUIRE(x <= 1.0);
    }
    REQUIRE(grid.flatten(grid.coords(flat)) == flat);
    REQUIRE(grid.nearest(p) == flat);
  }
  REQUIRE_THROWS_AS(ParameterGrid(2, 1), ConfigError);
  REQUIRE_THROWS_AS(ParameterGrid(0, 5), ConfigError);
}

TEST_CASE("apply_step clamps to the box") {
  ParameterGrid grid(2, 11);
  StepBall ball(1);
  auto flat = [&](int x, int y) {
    std::vector<int> c = {x, y};
    return grid.flatten(c);
  };
  std::vector<int> zero = {0, 0};
  REQUIRE(apply_step(flat(2, 2), zero, ball, grid) == flat(2, 2));
  std::vector<int> left = {-1, 0};
  REQUIRE(apply_step(flat(0, 0), left, ball, grid) == flat(0, 0));
  std::vector<int> diag = {1, -1};
  REQUIRE(apply_step(flat(5, 5), diag, ball, grid) == flat(6, 4));
  std::vector<int> outside = {2, 0};
  REQUIRE_THROWS_AS(apply_step(flat(5, 5), outside, ball, grid), ContractError);
}

TEST_CASE("ball neighbors") {
  ParameterGrid line(1, 11);
  REQUIRE(ball_neighbors(4, StepBall(0), line) == std::vector<int>{4});
  REQUIRE(ball_neighbors(0, StepBall(1), line) == std::vector<int>{0, 1});

  ParameterGrid plane(2, 11);
  std::vector<int> center = {5, 5};
  auto nbr = ball_neighbors(plane.flatten(center), StepBall(1), plane);
  REQUIRE(nbr.size() == 9);
  REQUIRE(std::find(nbr.begin(), nbr.end(), plane.flatten(center)) != nbr.end());
  REQUIRE(StepBall(1).displacements(2).size() == 9);
  REQUIRE(StepBall(2).displacements(2).size() == 25);
}

TEST_CASE("chain kernels at the linear family boundaries") {
  ChainConfig cfg;
  cfg.n_states = 4;
  ParameterGrid grid(1, 11);
  ParametricMdp chain = build_chain(cfg, grid);
  REQUIRE(chain.n_states() == 4);
  REQUIRE(chain.n_actions() == 2);

  // psi = 1: move right with probability one
  auto row = kernel_eval(chain, 0, 1, 10);
  REQUIRE(row[1] == Catch::Approx(1.0));
  // psi = 0.5: even split between stay and advance
  row = kernel_eval(chain, 0, 1, 5);
  REQUIRE(row[0] == Catch::Approx(0.5));
  REQUIRE(row[1] == Catch::Approx(0.5));
  // psi = 0: all movement fails
  row = kernel_eval(chain, 2, 1, 0);
  REQUIRE(row[2] == Catch::Approx(1.0));
  // boundary: moving left from state 0 stays
  row = kernel_eval(chain, 0, 0, 10);
  REQUIRE(row[0] == Catch::Approx(1.0));

  REQUIRE(chain.reward(3, 0) == 1.0);
  REQUIRE(chain.reward(1, 0) == 0.0);

  REQUIRE_THROWS_AS(kernel_eval(chain, 4, 0, 0), ContractError);
  REQUIRE_THROWS_AS(kernel_eval(chain, 0, 0, 11), ContractError);

  ChainConfig bad = cfg;
  bad.success_prob = [](std::span<const double> psi) {
    return 1.5 * psi[0];
  };
  REQUIRE_THROWS_AS(build_chain(bad, grid), ConfigError);
}

TEST_CASE("pendulum construction and barycentric rows") {
  PendulumConfig cfg;
  ParameterGrid grid(2, 5);
  ParametricMdp pendulum = build_pendulum(cfg, grid);
  REQUIRE(pendulum.n_states() == 225);
  REQUIRE(pendulum.n_actions() == 3);

  // every sampled row: at most 4 support bins, simplex within 1e-12
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    int s = rng.uniform_int(225);
    int a = rng.uniform_int(3);
    int psi = rng.uniform_int(grid.size());
    auto row = kernel_eval(pendulum, s, a, psi);
    int support = 0;
    double sum = 0.0;
    for (double p : row) {
      if (p > 0.0) ++support;
      sum += p;
    }
    REQUIRE(support <= 4);
    REQUIRE(sum == Catch::Approx(1.0).margin(1e-12));
  }

  // full scan: no violations anywhere on the grid
  REQUIRE(validate(pendulum).ok());

  REQUIRE_THROWS_AS(build_pendulum(cfg, ParameterGrid(1, 5)), ConfigError);
  PendulumConfig bad = cfg;
  bad.mass_min = -1.0;
  REQUIRE_THROWS_AS(build_pendulum(bad, grid), ConfigError);
  bad = cfg;
  bad.dt = 0.0;
  REQUIRE_THROWS_AS(build_pendulum(bad, grid), ConfigError);
}

// Independent one-Euler-step simulation of the upright equilibrium bin: with
// zero torque, the self-transition weight must dominate the support.
TEST_CASE("pendulum upright bin self-transition") {
  PendulumConfig cfg;
  ParameterGrid grid(2, 5);
  ParametricMdp pendulum = build_pendulum(cfg, grid);

  const double pi = std::numbers::pi;
  int na = cfg.angle_bins, nv = cfg.velocity_bins;
  auto angle_of = [&](int i) { return -pi + i * (2.0 * pi / na); };
  auto vel_of = [&](int j) { return -cfg.max_speed + j * (2.0 * cfg.max_speed / (nv - 1)); };

  // nearest bin to the upright equilibrium (theta=0, omega=0)
  int best_i = 0, best_j = 0;
  for (int i = 0; i < na; ++i)
    if (std::abs(angle_of(i)) < std::abs(angle_of(best_i))) best_i = i;
  for (int j = 0; j < nv; ++j)
    if (std::abs(vel_of(j)) < std::abs(vel_of(best_j))) best_j = j;
  int upright = best_i * nv + best_j;

  int zero_torque = 1;  // torques = {-2, 0, 2}
  REQUIRE(cfg.torques[zero_torque] == 0.0);

  for (int psi : {0, grid.size() / 2, grid.size() - 1}) {
    auto psi_point = grid.point(psi);
    double mass = cfg.mass_min + psi_point[0] * (cfg.mass_max - cfg.mass_min);
    double length =
        cfg.length_min + psi_point[1] * (cfg.length_max - cfg.length_min);

    // one Euler step, written out independently
    double theta = angle_of(best_i), omega = vel_of(best_j);
    double accel = 1.5 * cfg.gravity / length * std::sin(theta);
    double omega2 =
        std::clamp(omega + accel * cfg.dt, -cfg.max_speed, cfg.max_speed);
    double theta2 = std::remainder(theta + omega2 * cfg.dt, 2.0 * pi);
    if (theta2 >= pi) theta2 -= 2.0 * pi;

    // the displacement stays below half a bin on both axes, so the nearest
    // node keeps the largest barycentric weight
    REQUIRE(std::abs(theta2 - theta) < 0.5 * (2.0 * pi / na));
    REQUIRE(std::abs(omega2 - omega) < 0.5 * (2.0 * cfg.max_speed / (nv - 1)));

    auto row = pendulum.kernel(0, 0, psi);  // silence unused warning path
    row = pendulum.kernel(upright, zero_torque, psi);
    int argmax = static_cast<int>(
        std::max_element(row.begin(), row.end()) - row.begin());
    REQUIRE(argmax == upright);
  }
}

TEST_CASE("validate reports injected violations") {
  ChainConfig cfg;
  ParameterGrid grid(1, 5);
  ParametricMdp chain = build_chain(cfg, grid);
  REQUIRE(validate(chain).ok());

  // corrupt one kernel row so it sums to 0.9
  int S = chain.n_states(), A = chain.n_actions();
  std::vector<double> kernels;
  for (int psi = 0; psi < grid.size(); ++psi)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        auto row = chain.kernel(s, a, psi);
        kernels.insert(kernels.end(), row.begin(), row.end());
      }
  kernels[0] -= 0.1;
  std::vector<double> reward(chain.reward_table().begin(),
                             chain.reward_table().end());
  ParametricMdp corrupted = ParametricMdp::unchecked(
      S, A, chain.gamma(), reward, grid, kernels, "corrupted");
  ValidationReport report = validate(corrupted);
  REQUIRE(report.violations.size() == 1);
  REQUIRE(report.violations[0].kind == "row_sum");
  REQUIRE(report.violations[0].magnitude == Catch::Approx(0.1));

  // the checking constructor rejects the same tables
  REQUIRE_THROWS_AS(
      ParametricMdp(S, A, chain.gamma(), reward, grid, kernels, "corrupted"),
      ModelError);
}

TEST_CASE("constructors are deterministic") {
  ChainConfig chain_cfg;
  ParameterGrid grid(1, 7);
  ParametricMdp a = build_chain(chain_cfg, grid);
  ParametricMdp b = build_chain(chain_cfg, grid);
  for (int psi = 0; psi < grid.size(); ++psi)
    for (int s = 0; s < a.n_states(); ++s)
      for (int act = 0; act < a.n_actions(); ++act) {
        auto ra = a.kernel(s, act, psi);
        auto rb = b.kernel(s, act, psi);
        REQUIRE(std::equal(ra.begin(), ra.end(), rb.begin()));
      }

  PendulumConfig pend_cfg;
  pend_cfg.angle_bins = 7;
  pend_cfg.velocity_bins = 7;
  ParameterGrid grid2(2, 3);
  ParametricMdp p1 = build_pendulum(pend_cfg, grid2);
  ParametricMdp p2 = build_pendulum(pend_cfg, grid2);
  for (int psi = 0; psi < grid2.size(); ++psi)
    for (int s = 0; s < p1.n_states(); ++s)
      for (int act = 0; act < p1.n_actions(); ++act) {
        auto ra = p1.kernel(s, act, psi);
        auto rb = p2.kernel(s, act, psi);
        REQUIRE(std::equal(ra.begin(), ra.end(), rb.begin()));
      }
}

TEST_CASE("random instances satisfy the simplex invariant") {
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    ParametricMdp mdp = random_mdp(rng);
    REQUIRE(validate(mdp).ok());
    REQUIRE(mdp.gamma() < 1.0);
  }
}

TEST_CASE("model rejects bad shapes and discounts") {
  ParameterGrid grid(1, 3);
  std::vector<double> reward = {0.0, 0.0};
  std::vector<double> kernels(3 * 1 * 2 * 1, 1.0);
  REQUIRE_NOTHROW(ParametricMdp(1, 2, 0.9, reward, grid, kernels));
  REQUIRE_THROWS_AS(ParametricMdp(1, 2, 1.0, reward, grid, kernels),
                    ConfigError);
  REQUIRE_THROWS_AS(
      ParametricMdp(1, 2, 0.9, std::vector<double>{0.0}, grid, kernels),
      ConfigError);
}
