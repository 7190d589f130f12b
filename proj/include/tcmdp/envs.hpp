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

#include <cmath>
#include <numbers>
#include <vector>

#include "tcmdp/param_mdp.hpp"

namespace tcmdp {

// Goal-seeking chain: actions left/right succeed with probability f(psi) and
// otherwise leave the state unchanged. Reward 1 while in the goal state.
struct ChainConfig {
  int n_states = 4;
  int goal = -1;  // default: last state
  double gamma = 0.9;
  int param_dims = 1;
  // Success probability as a function of the normalized parameter point;
  // must map the whole box into [0,1]. Default: first coordinate.
  std::function<double(std::span<const double>)> success_prob;
};

inline ParametricMdp build_chain(const ChainConfig& cfg,
                                 const ParameterGrid& grid) {
  if (cfg.n_states < 2) throw ConfigError("chain needs at least 2 states");
  if (grid.dims() != cfg.param_dims)
    throw ConfigError("chain: grid dimension does not match param_dims");
  int goal = cfg.goal < 0 ? cfg.n_states - 1 : cfg.goal;
  if (goal < 0 || goal >= cfg.n_states)
    throw ConfigError("chain goal state out of range");
  auto f = cfg.success_prob
               ? cfg.success_prob
               : [](std::span<const double> psi) { return psi[0]; };

  // Reject families that leave [0,1] anywhere on the grid.
  std::vector<double> point(grid.dims());
  for (int psi = 0; psi < grid.size(); ++psi) {
    grid.point(psi, point);
    double p = f(point);
    if (!(p >= 0.0 && p <= 1.0))
      throw ConfigError("chain success probability outside [0,1] on the grid");
  }

  int n = cfg.n_states;
  std::vector<double> reward(n * 2, 0.0);
  reward[goal * 2 + 0] = 1.0;
  reward[goal * 2 + 1] = 1.0;

  KernelFamily family = [n, f](int s, int a, std::span<const double> psi,
                               std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    double p = f(psi);
    int target = a == 0 ? std::max(s - 1, 0) : std::min(s + 1, n - 1);
    out[s] += 1.0 - p;
    out[target] += p;
  };
  return ParametricMdp(n, 2, cfg.gamma, std::move(reward), grid, family,
                       "chain");
}

// Torque-limited pendulum on a wrapped angle x clamped velocity lattice.
// One Euler step of the rigid-pendulum dynamics, then the successor point is
// split barycentrically over its 2-4 surrounding lattice nodes. Parameters
// (mass, length) are mapped affinely from [0,1]^2 onto the physical ranges.
struct PendulumConfig {
  int angle_bins = 15;
  int velocity_bins = 15;
  std::vector<double> torques = {-2.0, 0.0, 2.0};
  double mass_min = 0.8, mass_max = 1.6;
  double length_min = 0.8, length_max = 1.6;
  double dt = 0.05;
  double max_speed = 8.0;
  double gravity = 9.81;
  double gamma = 0.95;
};

namespace detail {

struct PendulumDynamics {
  int angle_bins, velocity_bins;
  double dt, max_speed, gravity;
  double mass_min, mass_span, length_min, length_span;

  double angle_of(int i) const {
    return -std::numbers::pi + i * (2.0 * std::numbers::pi / angle_bins);
  }
  double velocity_of(int j) const {
    return -max_speed + j * (2.0 * max_speed / (velocity_bins - 1));
  }

  // Euler step from a lattice node under torque tau at parameter psi.
  void step(int i, int j, double tau, std::span<const double> psi,
            double& theta_next, double& omega_next) const {
    double mass = mass_min + psi[0] * mass_span;
    double length = length_min + psi[1] * length_span;
    double theta = angle_of(i);
    double omega = velocity_of(j);
    double accel = 1.5 * gravity / length * std::sin(theta) +
                   3.0 / (mass * length * length) * tau;
    omega_next = std::clamp(omega + accel * dt, -max_speed, max_speed);
    theta_next = theta + omega_next * dt;
    // wrap into [-pi, pi)
    theta_next = std::remainder(theta_next, 2.0 * std::numbers::pi);
    if (theta_next >= std::numbers::pi) theta_next -= 2.0 * std::numbers::pi;
  }

  // Barycentric weights of (theta, omega) over the lattice; angle wraps,
  // velocity clamps. At most 4 nodes receive mass.
  void scatter(double theta, double omega, std::span<double> out) const {
    double du = (theta + std::numbers::pi) /
                (2.0 * std::numbers::pi / angle_bins);
    int i0 = static_cast<int>(std::floor(du));
    double fu = du - i0;
    i0 = ((i0 % angle_bins) + angle_bins) % angle_bins;
    int i1 = (i0 + 1) % angle_bins;

    double dv = (omega + max_speed) / (2.0 * max_speed / (velocity_bins - 1));
    int j0 = std::clamp(static_cast<int>(std::floor(dv)), 0, velocity_bins - 2);
    double fv = std::clamp(dv - j0, 0.0, 1.0);
    int j1 = j0 + 1;

    out[i0 * velocity_bins + j0] += (1.0 - fu) * (1.0 - fv);
    out[i1 * velocity_bins + j0] += fu * (1.0 - fv);
    out[i0 * velocity_bins + j1] += (1.0 - fu) * fv;
    out[i1 * velocity_bins + j1] += fu * fv;
  }
};

}  // namespace detail

inline ParametricMdp build_pendulum(const PendulumConfig& cfg,
                                    const ParameterGrid& grid) {
  if (grid.dims() != 2)
    throw ConfigError("pendulum: parameter grid must be 2-dimensional");
  if (cfg.angle_bins < 2 || cfg.velocity_bins < 2)
    throw ConfigError("pendulum: need at least 2 bins per state axis");
  if (cfg.torques.empty()) throw ConfigError("pendulum: no torque levels");
  if (!(cfg.mass_min > 0.0 && cfg.mass_max >= cfg.mass_min))
    throw ConfigError("pendulum: mass range must be positive");
  if (!(cfg.length_min > 0.0 && cfg.length_max >= cfg.length_min))
    throw ConfigError("pendulum: length range must be positive");
  if (!(cfg.dt > 0.0 && cfg.max_speed > 0.0 && cfg.gravity > 0.0))
    throw ConfigError("pendulum: dt, max_speed and gravity must be positive");

  detail::PendulumDynamics dyn{cfg.angle_bins,
                               cfg.velocity_bins,
                               cfg.dt,
                               cfg.max_speed,
                               cfg.gravity,
                               cfg.mass_min,
                               cfg.mass_max - cfg.mass_min,
                               cfg.length_min,
                               cfg.length_max - cfg.length_min};

  int n_states = cfg.angle_bins * cfg.velocity_bins;
  int n_actions = static_cast<int>(cfg.torques.size());

  double tau_max = 0.0;
  for (double t : cfg.torques) tau_max = std::max(tau_max, std::abs(t));
  double worst_cost = std::numbers::pi * std::numbers::pi +
                      0.1 * cfg.max_speed * cfg.max_speed +
                      0.001 * tau_max * tau_max;

  std::vector<double> reward(n_states * n_actions);
  for (int i = 0; i < cfg.angle_bins; ++i)
    for (int j = 0; j < cfg.velocity_bins; ++j) {
      double theta = dyn.angle_of(i);
      double omega = dyn.velocity_of(j);
      for (int a = 0; a < n_actions; ++a) {
        double cost = theta * theta + 0.1 * omega * omega +
                      0.001 * cfg.torques[a] * cfg.torques[a];
        reward[(i * cfg.velocity_bins + j) * n_actions + a] =
            1.0 - cost / worst_cost;
      }
    }

  std::vector<double> torques = cfg.torques;
  int velocity_bins = cfg.velocity_bins;
  KernelFamily family = [dyn, torques, velocity_bins](
                            int s, int a, std::span<const double> psi,
                            std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    double theta, omega;
    dyn.step(s / velocity_bins, s % velocity_bins, torques[a], psi, theta,
             omega);
    dyn.scatter(theta, omega, out);
  };
  return ParametricMdp(n_states, n_actions, cfg.gamma, std::move(reward), grid,
                       family, "pendulum");
}

}  // namespace tcmdp
