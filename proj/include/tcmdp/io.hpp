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

#include <charconv>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tcmdp/policy.hpp"
#include "tcmdp/value_field.hpp"

namespace tcmdp {

using Json = nlohmann::json;

// Shortest round-trip decimal representation; keeps outputs byte-stable.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

inline void write_text(const std::filesystem::path& path,
                       const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out << text;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) {
    append_row(header);
  }

  void append_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }

  const std::string& text() const { return text_; }

  void save(const std::filesystem::path& path) const {
    write_text(path, text_);
  }

 private:
  std::string text_;
};

// Rows are states, columns are parameter grid indices.
inline void write_value_field_csv(const std::filesystem::path& path,
                                  const ValueField& field) {
  std::vector<std::string> header = {"state"};
  for (int psi = 0; psi < field.n_psi(); ++psi)
    header.push_back("psi_" + std::to_string(psi));
  CsvWriter csv(std::move(header));
  for (int s = 0; s < field.n_states(); ++s) {
    std::vector<std::string> row = {std::to_string(s)};
    for (int psi = 0; psi < field.n_psi(); ++psi)
      row.push_back(format_double(field.at(s, psi)));
    csv.append_row(row);
  }
  csv.save(path);
}

// One row per observation key: key index, readable label, distribution.
inline void write_policy_csv(const std::filesystem::path& path,
                             const PolicyTable& policy) {
  std::vector<std::string> header = {"key", "label"};
  for (int i = 0; i < policy.row_len(); ++i)
    header.push_back("p_" + std::to_string(i));
  CsvWriter csv(std::move(header));
  for (int key = 0; key < policy.n_keys(); ++key) {
    std::vector<std::string> row = {std::to_string(key),
                                    policy.key_label(key)};
    for (double p : policy.row(key)) row.push_back(format_double(p));
    csv.append_row(row);
  }
  csv.save(path);
}

// Full model dump for cross-checking: shapes, rewards, per-node kernels.
inline Json model_to_json(const ParametricMdp& mdp) {
  Json j;
  j["name"] = mdp.name();
  j["n_states"] = mdp.n_states();
  j["n_actions"] = mdp.n_actions();
  j["gamma"] = mdp.gamma();
  j["grid"] = {{"dims", mdp.grid().dims()},
               {"points_per_dim", mdp.grid().points_per_dim()}};
  Json rewards = Json::array();
  for (int s = 0; s < mdp.n_states(); ++s) {
    Json row = Json::array();
    for (int a = 0; a < mdp.n_actions(); ++a) row.push_back(mdp.reward(s, a));
    rewards.push_back(row);
  }
  j["reward"] = rewards;
  Json kernels = Json::array();
  for (int psi = 0; psi < mdp.grid().size(); ++psi) {
    Json per_psi = Json::array();
    for (int s = 0; s < mdp.n_states(); ++s)
      for (int a = 0; a < mdp.n_actions(); ++a) {
        auto row = mdp.kernel(s, a, psi);
        per_psi.push_back(std::vector<double>(row.begin(), row.end()));
      }
    kernels.push_back(per_psi);
  }
  j["kernels"] = kernels;
  return j;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  write_text(path, j.dump(2) + "\n");
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), h, 16);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace tcmdp
