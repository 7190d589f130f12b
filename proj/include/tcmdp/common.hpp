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

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

namespace tcmdp {

class Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-range configuration values.
class ConfigError : public Error {
  using Error::Error;
};

// A model table violates a structural invariant (simplex rows, reward range).
class ModelError : public Error {
  using Error::Error;
};

// A numerical routine could not certify its result.
class NumericalError : public Error {
  using Error::Error;
};

// Caller broke a documented precondition.
class ContractError : public Error {
  using Error::Error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractError(what);
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic RNG with platform-independent draws. Streams are derived by
// hashing a base seed with stream labels, so episode i / grid point j always
// sees the same stream regardless of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed_from(seed)) {}

  static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                    std::uint64_t c = 0) {
    std::uint64_t st = seed;
    std::uint64_t h = splitmix64(st);
    st ^= a + 0x9e3779b97f4a7c15ull;
    h ^= splitmix64(st);
    st ^= b + 0xc2b2ae3d27d4eb4full;
    h ^= splitmix64(st);
    st ^= c + 0x165667b19e3779f9ull;
    h ^= splitmix64(st);
    return Rng(h);
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    require(n > 0, "uniform_int: n must be positive");
    return static_cast<int>((static_cast<unsigned __int128>(next_u64()) *
                             static_cast<unsigned __int128>(n)) >>
                            64);
  }

 private:
  static std::uint64_t seed_from(std::uint64_t seed) {
    std::uint64_t st = seed;
    return splitmix64(st);
  }
  std::mt19937_64 engine_;
};

// Draws an index from a probability row; u must be in [0, 1).
inline int sample_categorical(std::span<const double> probs, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace tcmdp
