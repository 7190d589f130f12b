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

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "tcmdp/envs.hpp"
#include "tcmdp/eval.hpp"
#include "tcmdp/schedules.hpp"

namespace tcmdp {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t lo = s.find_first_not_of(" \t\r\n");
  if (lo == std::string::npos) return "";
  std::size_t hi = s.find_last_not_of(" \t\r\n");
  return s.substr(lo, hi - lo + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

// Flat key = value configuration file. Lines starting with '#' are comments.
// List values are comma separated. Keys must be unique and must belong to the
// documented schema.
class ConfigMap {
 public:
  static ConfigMap parse_string(const std::string& text) {
    ConfigMap map;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
      ++line_no;
      std::string stripped = detail::trim(line);
      if (stripped.empty() || stripped[0] == '#') continue;
      std::size_t eq = stripped.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": expected key = value");
      std::string key = detail::trim(stripped.substr(0, eq));
      std::string value = detail::trim(stripped.substr(eq + 1));
      if (key.empty())
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": empty key");
      if (map.values_.count(key))
        throw ConfigError("duplicate config key: " + key);
      map.values_[key] = value;
    }
    return map;
  }

  static ConfigMap parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& dflt) const {
    auto it = values_.find(key);
    return it == values_.end() ? dflt : it->second;
  }

  double get_double(const std::string& key, double dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    return parse_double(key, it->second);
  }

  int get_int(const std::string& key, int dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    return parse_int(key, it->second);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    try {
      return std::stoull(it->second);
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + ": not an unsigned integer");
    }
  }

  bool get_bool(const std::string& key, bool dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("config key " + key + ": expected true/false");
  }

  std::vector<double> get_double_list(const std::string& key,
                                      std::vector<double> dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    std::vector<double> out;
    for (const auto& item : detail::split_list(it->second))
      out.push_back(parse_double(key, item));
    return out;
  }

  std::vector<std::string> get_string_list(const std::string& key,
                                           std::vector<std::string> dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    return detail::split_list(it->second);
  }

  std::vector<std::uint64_t> get_u64_list(const std::string& key,
                                          std::vector<std::uint64_t> dflt) const {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    std::vector<std::uint64_t> out;
    for (const auto& item : detail::split_list(it->second)) {
      try {
        out.push_back(std::stoull(item));
      } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not an unsigned integer");
      }
    }
    return out;
  }

  void reject_unknown(const std::set<std::string>& known) const {
    for (const auto& [key, value] : values_)
      if (!known.count(key)) throw ConfigError("unknown config key: " + key);
  }

  // Sorted key=value text; the config hash is computed over this.
  std::string canonical() const {
    std::string out;
    for (const auto& [key, value] : values_) out += key + "=" + value + "\n";
    return out;
  }

  std::uint64_t hash() const { return fnv1a64(canonical()); }

 private:
  static double parse_double(const std::string& key, const std::string& text) {
    try {
      std::size_t used = 0;
      double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + ": not a number");
    }
  }
  static int parse_int(const std::string& key, const std::string& text) {
    try {
      std::size_t used = 0;
      long v = std::stol(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return static_cast<int>(v);
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + ": not an integer");
    }
  }

  std::map<std::string, std::string> values_;
};

// Typed experiment description. Every key is validated up front; computation
// starts only on a fully valid configuration.
struct ExperimentConfig {
  // environment
  std::string env_kind;  // chain | pendulum
  ChainConfig chain;
  PendulumConfig pendulum;
  int grid_points = 5;
  double ball_radius = 0.1;

  // solver
  std::string solver_operator = "tc";  // tc | param | rect | nominal
  BackupMode solver_mode = BackupMode::MixedExact;
  double solver_epsilon = 1e-8;
  int solver_max_iters = 100000;
  int solver_rounds = 4;
  int solver_nominal_psi = -1;  // -1: grid midpoint
  std::vector<ObservationClass> train_classes = {ObservationClass::Vanilla,
                                                 ObservationClass::Stacked,
                                                 ObservationClass::Oracle};

  // evaluation
  std::vector<std::string> eval_protocols = {"tc_worst", "static", "schedules"};
  std::vector<std::string> eval_agents = {"tc", "rect", "nominal"};
  int eval_episodes = 10;
  int eval_horizon = 1000;
  int eval_segments = 10;
  double eval_radius = 0.001;
  bool eval_discounted = false;
  std::optional<double> ref_low;
  std::optional<double> ref_target;
  std::vector<ScheduleKind> eval_schedule_kinds = all_schedule_kinds();
  double eval_schedule_radius = 0.1;

  // optional single-schedule block (trajectory export)
  std::optional<ScheduleConfig> schedule;

  // checks
  int check_instances = 50;
  int check_value_pairs = 20;
  int check_sequences = 100;
  std::string check_inject;  // "", "drift"

  std::vector<std::uint64_t> seeds = {1};

  std::string canonical_text;
  std::uint64_t config_hash = 0;

  static const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "env.kind", "env.n_states", "env.goal", "env.gamma", "env.param_dims",
        "env.angle_bins", "env.velocity_bins", "env.torques", "env.mass_range",
        "env.length_range", "env.dt", "env.max_speed", "env.gravity",
        "grid.segments_per_dim", "ball.radius",
        "solver.operator", "solver.mode", "solver.epsilon", "solver.max_iters",
        "solver.rounds", "solver.nominal_psi", "solver.classes",
        "eval.protocols", "eval.agents", "eval.episodes", "eval.horizon",
        "eval.segments", "eval.radius", "eval.discounted", "eval.ref_low",
        "eval.ref_target", "eval.schedule_kinds", "eval.schedule_radius",
        "schedule.kind", "schedule.radius", "schedule.horizon", "schedule.seed",
        "check.instances", "check.value_pairs", "check.sequences",
        "check.inject", "seeds"};
    return keys;
  }

  static ExperimentConfig load(const ConfigMap& map) {
    map.reject_unknown(known_keys());
    ExperimentConfig cfg;
    cfg.canonical_text = map.canonical();
    cfg.config_hash = map.hash();

    cfg.env_kind = map.get_string("env.kind", "");
    if (cfg.env_kind != "chain" && cfg.env_kind != "pendulum")
      throw ConfigError("env.kind must be chain or pendulum");

    double gamma = map.get_double("env.gamma",
                                  cfg.env_kind == "chain" ? 0.9 : 0.95);
    if (!(gamma >= 0.0 && gamma < 1.0))
      throw ConfigError("env.gamma must lie in [0,1)");

    if (cfg.env_kind == "chain") {
      cfg.chain.n_states = map.get_int("env.n_states", 4);
      cfg.chain.goal = map.get_int("env.goal", -1);
      cfg.chain.gamma = gamma;
      cfg.chain.param_dims = map.get_int("env.param_dims", 1);
      if (cfg.chain.param_dims < 1)
        throw ConfigError("env.param_dims must be >= 1");
    } else {
      cfg.pendulum.angle_bins = map.get_int("env.angle_bins", 15);
      cfg.pendulum.velocity_bins = map.get_int("env.velocity_bins", 15);
      cfg.pendulum.torques =
          map.get_double_list("env.torques", {-2.0, 0.0, 2.0});
      auto mass = map.get_double_list("env.mass_range", {0.8, 1.6});
      auto length = map.get_double_list("env.length_range", {0.8, 1.6});
      if (mass.size() != 2 || length.size() != 2)
        throw ConfigError("mass/length ranges need exactly 2 values");
      cfg.pendulum.mass_min = mass[0];
      cfg.pendulum.mass_max = mass[1];
      cfg.pendulum.length_min = length[0];
      cfg.pendulum.length_max = length[1];
      cfg.pendulum.dt = map.get_double("env.dt", 0.05);
      cfg.pendulum.max_speed = map.get_double("env.max_speed", 8.0);
      cfg.pendulum.gravity = map.get_double("env.gravity", 9.81);
      cfg.pendulum.gamma = gamma;
    }

    cfg.grid_points = map.get_int("grid.segments_per_dim", 5);
    if (cfg.grid_points < 2)
      throw ConfigError("grid.segments_per_dim must be >= 2");
    cfg.ball_radius = map.get_double("ball.radius", 0.1);
    if (cfg.ball_radius < 0) throw ConfigError("ball.radius must be >= 0");

    cfg.solver_operator = map.get_string("solver.operator", "tc");
    if (cfg.solver_operator != "tc" && cfg.solver_operator != "param" &&
        cfg.solver_operator != "rect" && cfg.solver_operator != "nominal")
      throw ConfigError("solver.operator must be tc|param|rect|nominal");
    std::string mode = map.get_string("solver.mode", "mixed");
    if (mode == "mixed")
      cfg.solver_mode = BackupMode::MixedExact;
    else if (mode == "pure")
      cfg.solver_mode = BackupMode::PureActions;
    else
      throw ConfigError("solver.mode must be mixed or pure");
    cfg.solver_epsilon = map.get_double("solver.epsilon", 1e-8);
    if (!(cfg.solver_epsilon > 0)) throw ConfigError("solver.epsilon must be > 0");
    cfg.solver_max_iters = map.get_int("solver.max_iters", 100000);
    if (cfg.solver_max_iters < 1)
      throw ConfigError("solver.max_iters must be >= 1");
    cfg.solver_rounds = map.get_int("solver.rounds", 4);
    if (cfg.solver_rounds < 1) throw ConfigError("solver.rounds must be >= 1");
    cfg.solver_nominal_psi = map.get_int("solver.nominal_psi", -1);
    if (map.has("solver.classes")) {
      cfg.train_classes.clear();
      for (const auto& name : map.get_string_list("solver.classes", {}))
        cfg.train_classes.push_back(observation_class_from_string(name));
      if (cfg.train_classes.empty())
        throw ConfigError("solver.classes must not be empty");
    }

    cfg.eval_protocols = map.get_string_list(
        "eval.protocols", {"tc_worst", "static", "schedules"});
    for (const auto& p : cfg.eval_protocols)
      if (p != "tc_worst" && p != "static" && p != "schedules")
        throw ConfigError("unknown eval protocol: " + p);
    cfg.eval_agents =
        map.get_string_list("eval.agents", {"tc", "rect", "nominal"});
    for (const auto& a : cfg.eval_agents)
      if (a != "tc" && a != "rect" && a != "param" && a != "nominal")
        throw ConfigError("unknown eval agent: " + a);
    cfg.eval_episodes = map.get_int("eval.episodes", 10);
    cfg.eval_horizon = map.get_int("eval.horizon", 1000);
    cfg.eval_segments = map.get_int("eval.segments", 10);
    if (cfg.eval_episodes < 1 || cfg.eval_horizon < 1 || cfg.eval_segments < 2)
      throw ConfigError("eval block: episodes/horizon/segments out of range");
    cfg.eval_radius = map.get_double("eval.radius", 0.001);
    cfg.eval_discounted = map.get_bool("eval.discounted", false);
    if (map.has("eval.ref_low")) cfg.ref_low = map.get_double("eval.ref_low", 0);
    if (map.has("eval.ref_target"))
      cfg.ref_target = map.get_double("eval.ref_target", 0);
    if (map.has("eval.schedule_kinds")) {
      cfg.eval_schedule_kinds.clear();
      for (const auto& k : map.get_string_list("eval.schedule_kinds", {}))
        cfg.eval_schedule_kinds.push_back(schedule_kind_from_string(k));
    }
    cfg.eval_schedule_radius = map.get_double("eval.schedule_radius", 0.1);

    if (map.has("schedule.kind")) {
      ScheduleConfig sc;
      sc.kind = schedule_kind_from_string(map.get_string("schedule.kind", ""));
      sc.radius = map.get_double("schedule.radius", 0.1);
      sc.horizon = map.get_int("schedule.horizon", 1000);
      sc.seed = map.get_u64("schedule.seed", 1);
      if (sc.radius < 0 || sc.horizon < 1)
        throw ConfigError("schedule block: radius/horizon out of range");
      cfg.schedule = sc;
    }

    cfg.check_instances = map.get_int("check.instances", 50);
    cfg.check_value_pairs = map.get_int("check.value_pairs", 20);
    cfg.check_sequences = map.get_int("check.sequences", 100);
    if (cfg.check_instances < 1 || cfg.check_value_pairs < 1 ||
        cfg.check_sequences < 1)
      throw ConfigError("check block: counts must be positive");
    cfg.check_inject = map.get_string("check.inject", "");
    if (!cfg.check_inject.empty() && cfg.check_inject != "drift")
      throw ConfigError("check.inject must be empty or drift");

    cfg.seeds = map.get_u64_list("seeds", {1});
    if (cfg.seeds.empty()) throw ConfigError("seeds must not be empty");
    return cfg;
  }

  static ExperimentConfig load_file(const std::string& path) {
    return load(ConfigMap::parse_file(path));
  }

  int param_dims() const {
    return env_kind == "chain" ? chain.param_dims : 2;
  }

  ParameterGrid build_grid() const {
    return ParameterGrid(param_dims(), grid_points);
  }

  ParametricMdp build_env() const {
    ParameterGrid grid = build_grid();
    return env_kind == "chain" ? build_chain(chain, grid)
                               : build_pendulum(pendulum, grid);
  }

  StepBall build_ball(const ParameterGrid& grid) const {
    return StepBall::from_radius(ball_radius, grid);
  }

  int nominal_psi(const ParameterGrid& grid) const {
    if (solver_nominal_psi >= 0) {
      if (solver_nominal_psi >= grid.size())
        throw ConfigError("solver.nominal_psi out of range");
      return solver_nominal_psi;
    }
    std::vector<double> center(grid.dims(), 0.5);
    return grid.nearest(center);
  }
};

}  // namespace tcmdp
