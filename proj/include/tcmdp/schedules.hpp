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
#include <string>
#include <vector>

#include "tcmdp/common.hpp"

namespace tcmdp {

// Fixed (non-learned) parameter disturbances used for evaluation. Every kind
// draws psi_0 uniformly on [0,1]^d at episode start; the curve kinds also
// draw a target vertex of the box (cosine draws a phase instead). Emitted
// steps are clipped to the per-step radius and clamped to the box, so every
// trajectory satisfies the time constraint by construction.
enum class ScheduleKind { RandomWalk, Cosine, Linear, Exponential, Logarithmic };

inline const char* to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::RandomWalk: return "random";
    case ScheduleKind::Cosine: return "cosine";
    case ScheduleKind::Linear: return "linear";
    case ScheduleKind::Exponential: return "exponential";
    case ScheduleKind::Logarithmic: return "logarithmic";
  }
  return "?";
}

inline ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "random") return ScheduleKind::RandomWalk;
  if (s == "cosine") return ScheduleKind::Cosine;
  if (s == "linear") return ScheduleKind::Linear;
  if (s == "exponential") return ScheduleKind::Exponential;
  if (s == "logarithmic") return ScheduleKind::Logarithmic;
  throw ConfigError("unknown schedule kind: " + s);
}

inline const std::vector<ScheduleKind>& all_schedule_kinds() {
  static const std::vector<ScheduleKind> kinds = {
      ScheduleKind::RandomWalk, ScheduleKind::Cosine, ScheduleKind::Linear,
      ScheduleKind::Exponential, ScheduleKind::Logarithmic};
  return kinds;
}

struct ScheduleConfig {
  ScheduleKind kind = ScheduleKind::RandomWalk;
  int dims = 1;
  double radius = 0.1;   // per-step infinity-norm bound in [0,1]^d
  int horizon = 1000;
  std::uint64_t seed = 0;
};

class Schedule {
 public:
  explicit Schedule(const ScheduleConfig& cfg)
      : cfg_(cfg), rng_(Rng::stream(cfg.seed, 0x5ced, cfg.dims)) {
    if (cfg.dims < 1) throw ConfigError("schedule needs at least 1 dimension");
    if (cfg.radius < 0.0) throw ConfigError("schedule radius must be >= 0");
    if (cfg.horizon < 1) throw ConfigError("schedule horizon must be >= 1");
  }

  const ScheduleConfig& config() const { return cfg_; }

  // Starts a new episode: psi_0 ~ U([0,1]^d); curve kinds sample their target
  // vertex among the 2^d corners, cosine samples a phase in [0, 2pi).
  std::vector<double> init() {
    psi0_.resize(cfg_.dims);
    vertex_.assign(cfg_.dims, 0.0);
    for (double& v : psi0_) v = rng_.uniform01();
    phase_ = 0.0;
    switch (cfg_.kind) {
      case ScheduleKind::Cosine:
        phase_ = rng_.uniform(0.0, 2.0 * std::numbers::pi);
        break;
      case ScheduleKind::Linear:
      case ScheduleKind::Exponential:
      case ScheduleKind::Logarithmic:
        for (double& v : vertex_) v = rng_.uniform_int(2);
        break;
      case ScheduleKind::RandomWalk:
        break;
    }
    return psi0_;
  }

  // For replaying a fixed episode (tests, closed-form checks).
  void set_episode(std::vector<double> psi0, std::vector<double> vertex,
                   double phase) {
    psi0_ = std::move(psi0);
    vertex_ = std::move(vertex);
    phase_ = phase;
  }

  const std::vector<double>& psi0() const { return psi0_; }
  const std::vector<double>& vertex() const { return vertex_; }
  double phase() const { return phase_; }

  // psi_t from psi_{t-1}; valid for 1 <= t <= horizon.
  std::vector<double> step(int t, std::span<const double> psi_prev) {
    require(t >= 1 && t <= cfg_.horizon, "schedule step index out of range");
    require(static_cast<int>(psi_prev.size()) == cfg_.dims,
            "schedule point dimension mismatch");
    std::vector<double> out(cfg_.dims);
    if (cfg_.kind == ScheduleKind::RandomWalk) {
      for (int i = 0; i < cfg_.dims; ++i) {
        double u = rng_.uniform(-cfg_.radius, cfg_.radius);
        out[i] = std::clamp(psi_prev[i] + u, 0.0, 1.0);
      }
      return out;
    }
    for (int i = 0; i < cfg_.dims; ++i) {
      double delta = target(i, t) - psi_prev[i];
      delta = std::clamp(delta, -cfg_.radius, cfg_.radius);
      out[i] = std::clamp(psi_prev[i] + delta, 0.0, 1.0);
    }
    return out;
  }

 private:
  // The deterministic curve the emitted trajectory tracks.
  double target(int i, int t) const {
    double tau = static_cast<double>(t) / cfg_.horizon;
    switch (cfg_.kind) {
      case ScheduleKind::Cosine: {
        double amp = std::min(psi0_[i], 1.0 - psi0_[i]);
        double omega = cfg_.radius / std::max(amp, 1e-9);
        return psi0_[i] + amp * std::cos(omega * t + phase_);
      }
      case ScheduleKind::Linear:
        return psi0_[i] + tau * (vertex_[i] - psi0_[i]);
      case ScheduleKind::Exponential:
        return psi0_[i] + (vertex_[i] - psi0_[i]) *
                              (1.0 - std::exp(-5.0 * tau)) /
                              (1.0 - std::exp(-5.0));
      case ScheduleKind::Logarithmic:
        return psi0_[i] + (vertex_[i] - psi0_[i]) *
                              std::log(1.0 + 9.0 * tau) / std::log(10.0);
      case ScheduleKind::RandomWalk:
        break;
    }
    return psi0_[i];
  }

  ScheduleConfig cfg_;
  Rng rng_;
  std::vector<double> psi0_;
  std::vector<double> vertex_;
  double phase_ = 0.0;
};

}  // namespace tcmdp
