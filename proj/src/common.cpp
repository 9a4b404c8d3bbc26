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

#include "pvedge/common.hpp"

#include <cmath>
#include <numbers>

namespace pvedge {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::schema: return "schema";
    case ErrorKind::parse: return "parse";
    case ErrorKind::duplicate_timestamp: return "duplicate_timestamp";
    case ErrorKind::empty_dataset: return "empty_dataset";
    case ErrorKind::argument: return "argument";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::degenerate_leaf: return "degenerate_leaf";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::undefined_variance: return "undefined_variance";
    case ErrorKind::validation: return "validation";
    case ErrorKind::lowering: return "lowering";
  }
  return "unknown";
}

std::string_view to_string(Target target) {
  return target == Target::active ? "active" : "reactive";
}

Target parse_target(std::string_view text) {
  if (text == "active" || text == "p") return Target::active;
  if (text == "reactive" || text == "q") return Target::reactive;
  throw Error(ErrorKind::argument,
              "target must be 'active' or 'reactive', got '" + std::string(text) + "'");
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorKind::argument, "Rng::below requires bound > 0");
  // Rejection keeps the draw unbiased: discard the incomplete top bucket.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

double Rng::normal() {
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace pvedge
