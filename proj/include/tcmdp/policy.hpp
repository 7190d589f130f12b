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

#include <numeric>
#include <string>
#include <vector>

#include "tcmdp/param_mdp.hpp"

namespace tcmdp {

inline constexpr double kPolicyRowTolerance = 1e-9;

// What the decision maker observes before acting.
//   Oracle   - current state and current parameter grid point
//   Stacked  - current state plus previous state and action
//   Vanilla  - current state only
//   Adversary- (state, realized action, parameter); rows over displacements
enum class ObservationClass { Oracle, Stacked, Vanilla, Adversary };

inline const char* to_string(ObservationClass cls) {
  switch (cls) {
    case ObservationClass::Oracle: return "oracle";
    case ObservationClass::Stacked: return "stacked";
    case ObservationClass::Vanilla: return "vanilla";
    case ObservationClass::Adversary: return "adversary";
  }
  return "?";
}

inline ObservationClass observation_class_from_string(const std::string& s) {
  if (s == "oracle") return ObservationClass::Oracle;
  if (s == "stacked") return ObservationClass::Stacked;
  if (s == "vanilla") return ObservationClass::Vanilla;
  if (s == "adversary") return ObservationClass::Adversary;
  throw ConfigError("unknown observation class: " + s);
}

// Stacked observations index (s, predecessor); predecessor 0 is the
// distinguished episode-start key, otherwise 1 + sp*A + ap.
inline int stacked_obs_count(int n_states, int n_actions) {
  return n_states * (n_states * n_actions + 1);
}
inline int stacked_start_obs(int s, int n_states, int n_actions) {
  (void)n_states;
  return s * (n_states * n_actions + 1);
}
inline int stacked_obs(int s, int s_prev, int a_prev, int n_states,
                       int n_actions) {
  return s * (n_states * n_actions + 1) + 1 + s_prev * n_actions + a_prev;
}

// Mixed policy stored as one probability row per observation key. Agent rows
// range over actions; adversary rows range over step-ball displacements.
class PolicyTable {
 public:
  static PolicyTable uniform(ObservationClass cls, const ParametricMdp& mdp,
                             const StepBall* ball = nullptr) {
    PolicyTable table(cls, mdp, ball);
    double p = 1.0 / table.row_len_;
    std::fill(table.rows_.begin(), table.rows_.end(), p);
    return table;
  }

  ObservationClass observation_class() const { return cls_; }
  int n_keys() const { return n_keys_; }
  int row_len() const { return row_len_; }
  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  int n_psi() const { return n_psi_; }

  int oracle_key(int s, int psi) const {
    require(cls_ == ObservationClass::Oracle, "not an oracle policy");
    return s * n_psi_ + psi;
  }
  int vanilla_key(int s) const {
    require(cls_ == ObservationClass::Vanilla, "not a vanilla policy");
    return s;
  }
  int stacked_start_key(int s) const {
    require(cls_ == ObservationClass::Stacked, "not a stacked policy");
    return stacked_start_obs(s, n_states_, n_actions_);
  }
  int stacked_key(int s, int s_prev, int a_prev) const {
    require(cls_ == ObservationClass::Stacked, "not a stacked policy");
    return stacked_obs(s, s_prev, a_prev, n_states_, n_actions_);
  }
  int adversary_key(int s, int a, int psi) const {
    require(cls_ == ObservationClass::Adversary, "not an adversary policy");
    return (s * n_actions_ + a) * n_psi_ + psi;
  }

  std::span<const double> row(int key) const {
    require(key >= 0 && key < n_keys_, "policy key out of range");
    return {rows_.data() + static_cast<std::size_t>(key) * row_len_,
            static_cast<std::size_t>(row_len_)};
  }

  void set_row(int key, std::span<const double> probs) {
    require(key >= 0 && key < n_keys_, "policy key out of range");
    require(static_cast<int>(probs.size()) == row_len_,
            "policy row length mismatch");
    double sum = 0.0;
    for (double p : probs) {
      require(p >= 0.0, "policy row has a negative entry");
      sum += p;
    }
    require(std::abs(sum - 1.0) <= kPolicyRowTolerance,
            "policy row does not sum to 1");
    std::copy(probs.begin(), probs.end(),
              rows_.begin() + static_cast<std::size_t>(key) * row_len_);
  }

  void set_deterministic(int key, int index) {
    require(index >= 0 && index < row_len_, "policy entry out of range");
    auto begin = rows_.begin() + static_cast<std::size_t>(key) * row_len_;
    std::fill(begin, begin + row_len_, 0.0);
    *(begin + index) = 1.0;
  }

  int argmax(int key) const {
    auto r = row(key);
    return static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }

  bool deterministic() const {
    for (int k = 0; k < n_keys_; ++k) {
      auto r = row(k);
      if (*std::max_element(r.begin(), r.end()) < 1.0 - kPolicyRowTolerance)
        return false;
    }
    return true;
  }

  // Re-checks every row; backups call this on entry.
  void check_rows() const {
    for (int k = 0; k < n_keys_; ++k) {
      double sum = 0.0;
      for (double p : row(k)) {
        require(p >= 0.0, "policy row has a negative entry");
        sum += p;
      }
      require(std::abs(sum - 1.0) <= kPolicyRowTolerance,
              "policy row does not sum to 1");
    }
  }

  // Represents a poorer-information policy in a richer class; behavior is
  // unchanged. Valid targets: vanilla -> {oracle, stacked}, oracle -> oracle,
  // stacked -> stacked.
  static PolicyTable lift(const PolicyTable& from, ObservationClass to,
                          const ParametricMdp& mdp) {
    if (from.cls_ == to) return from;
    require(from.cls_ == ObservationClass::Vanilla,
            "only vanilla policies can be lifted");
    PolicyTable out(to, mdp, nullptr);
    if (to == ObservationClass::Oracle) {
      for (int s = 0; s < out.n_states_; ++s)
        for (int psi = 0; psi < out.n_psi_; ++psi)
          out.set_row(out.oracle_key(s, psi), from.row(s));
    } else if (to == ObservationClass::Stacked) {
      for (int s = 0; s < out.n_states_; ++s) {
        out.set_row(out.stacked_start_key(s), from.row(s));
        for (int sp = 0; sp < out.n_states_; ++sp)
          for (int ap = 0; ap < out.n_actions_; ++ap)
            out.set_row(out.stacked_key(s, sp, ap), from.row(s));
      }
    } else {
      throw ContractError("cannot lift a policy to the adversary class");
    }
    return out;
  }

  // Human-readable key description, used by the CSV exports.
  std::string key_label(int key) const {
    switch (cls_) {
      case ObservationClass::Vanilla:
        return "s=" + std::to_string(key);
      case ObservationClass::Oracle:
        return "s=" + std::to_string(key / n_psi_) +
               ";psi=" + std::to_string(key % n_psi_);
      case ObservationClass::Stacked: {
        int stride = n_states_ * n_actions_ + 1;
        int s = key / stride;
        int rest = key % stride;
        if (rest == 0) return "s=" + std::to_string(s) + ";prev=start";
        --rest;
        return "s=" + std::to_string(s) +
               ";sp=" + std::to_string(rest / n_actions_) +
               ";ap=" + std::to_string(rest % n_actions_);
      }
      case ObservationClass::Adversary: {
        int psi = key % n_psi_;
        int sa = key / n_psi_;
        return "s=" + std::to_string(sa / n_actions_) +
               ";a=" + std::to_string(sa % n_actions_) +
               ";psi=" + std::to_string(psi);
      }
    }
    return "?";
  }

 private:
  PolicyTable(ObservationClass cls, const ParametricMdp& mdp,
              const StepBall* ball)
      : cls_(cls),
        n_states_(mdp.n_states()),
        n_actions_(mdp.n_actions()),
        n_psi_(mdp.grid().size()) {
    switch (cls) {
      case ObservationClass::Oracle:
        n_keys_ = n_states_ * n_psi_;
        row_len_ = n_actions_;
        break;
      case ObservationClass::Stacked:
        n_keys_ = stacked_obs_count(n_states_, n_actions_);
        row_len_ = n_actions_;
        break;
      case ObservationClass::Vanilla:
        n_keys_ = n_states_;
        row_len_ = n_actions_;
        break;
      case ObservationClass::Adversary: {
        require(ball != nullptr, "adversary policy needs a step ball");
        int dims = mdp.grid().dims();
        int per_axis = 2 * ball->radius_cells() + 1;
        row_len_ = 1;
        for (int i = 0; i < dims; ++i) row_len_ *= per_axis;
        n_keys_ = n_states_ * n_actions_ * n_psi_;
        break;
      }
    }
    rows_.assign(static_cast<std::size_t>(n_keys_) * row_len_, 0.0);
  }

  ObservationClass cls_;
  int n_states_;
  int n_actions_;
  int n_psi_;
  int n_keys_ = 0;
  int row_len_ = 0;
  std::vector<double> rows_;
};

}  // namespace tcmdp
