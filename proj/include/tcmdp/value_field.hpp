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
#include <vector>

#include "tcmdp/common.hpp"

namespace tcmdp {

enum class FieldKind { StateOnly, Augmented };

// Real-valued table over S (StateOnly) or over S x parameter-grid
// (Augmented). Augmented data is laid out one state-slice per grid point.
class ValueField {
 public:
  static ValueField state_only(int n_states, double init = 0.0) {
    return ValueField(FieldKind::StateOnly, n_states, 1, init);
  }
  static ValueField augmented(int n_states, int n_psi, double init = 0.0) {
    return ValueField(FieldKind::Augmented, n_states, n_psi, init);
  }

  FieldKind kind() const { return kind_; }
  int n_states() const { return n_states_; }
  int n_psi() const { return n_psi_; }

  double at(int s, int psi = 0) const { return data_[index(s, psi)]; }
  double& at(int s, int psi = 0) { return data_[index(s, psi)]; }

  std::span<const double> slice(int psi) const {
    return {data_.data() + static_cast<std::size_t>(psi) * n_states_,
            static_cast<std::size_t>(n_states_)};
  }
  std::span<double> slice(int psi) {
    return {data_.data() + static_cast<std::size_t>(psi) * n_states_,
            static_cast<std::size_t>(n_states_)};
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool same_shape(const ValueField& other) const {
    return kind_ == other.kind_ && n_states_ == other.n_states_ &&
           n_psi_ == other.n_psi_;
  }

 private:
  ValueField(FieldKind kind, int n_states, int n_psi, double init)
      : kind_(kind),
        n_states_(n_states),
        n_psi_(n_psi),
        data_(static_cast<std::size_t>(n_states) * n_psi, init) {
    require(n_states >= 1 && n_psi >= 1, "value field needs positive extents");
  }

  std::size_t index(int s, int psi) const {
    require(s >= 0 && s < n_states_ && psi >= 0 && psi < n_psi_,
            "value field index out of range");
    return static_cast<std::size_t>(psi) * n_states_ + s;
  }

  FieldKind kind_;
  int n_states_;
  int n_psi_;
  std::vector<double> data_;
};

// Sup-norm distance between two fields of identical shape.
inline double max_abs_diff(const ValueField& a, const ValueField& b) {
  require(a.same_shape(b), "value field shape mismatch");
  double m = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i)
    m = std::max(m, std::abs(da[i] - db[i]));
  return m;
}

inline double max_abs(const ValueField& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace tcmdp
