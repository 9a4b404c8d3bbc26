// Copyright 2026 The pvedge Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pvedge {

// Width of the model input vector (the 1x12 tensor the deployed model takes).
inline constexpr std::size_t kFeatureCount = 12;

enum class ErrorKind {
  io,
  schema,
  parse,
  duplicate_timestamp,
  empty_dataset,
  argument,
  dimension,
  degenerate_leaf,
  numerical,
  undefined_variance,
  validation,
  lowering,
};

std::string_view to_string(ErrorKind kind);

// All library failures are reported through this type. kind() is stable and
// machine readable; what() carries the human detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

enum class Target { active, reactive };

std::string_view to_string(Target target);
Target parse_target(std::string_view text);

// Portable seeded stream. Only the raw mt19937_64 output is standardized, so
// the derived draws below are written out explicitly to keep datasets and
// splits bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, bound), unbiased. bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  // Standard normal (Box-Muller, no caching).
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace pvedge
