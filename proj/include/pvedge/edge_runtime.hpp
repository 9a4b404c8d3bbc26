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

// Reduced-precision execution path for edge devices. A model is lowered to
// float32 scalars and evaluated with float32 comparisons and accumulation;
// comparing it against the float64 path reproduces the small output drift
// seen when a model is moved between platforms.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pvedge/gbdt.hpp"
#include "pvedge/model_format.hpp"

namespace pvedge {

using F32Input = std::array<float, kFeatureCount>;

// All trees packed into one structure-of-arrays node table. Per-tree arena
// order is preserved, so node (tree t, local i) lives at roots[t] + i.
struct F32Model {
  std::size_t feature_count = kFeatureCount;
  float base_score = 0.0f;
  Target target = Target::active;
  std::vector<std::uint32_t> roots;
  std::vector<std::uint32_t> feature;
  std::vector<float> value;  // threshold for branches, weight for leaves
  std::vector<std::uint32_t> true_child;
  std::vector<std::uint32_t> false_child;
  std::vector<std::uint8_t> is_leaf;

  std::size_t tree_count() const { return roots.size(); }
};

// Rounds every scalar to the nearest float32. Throws Error(lowering) when a
// value overflows float32 and Error(validation) for an invalid artifact.
F32Model lower_to_f32(const ModelArtifact& artifact);
F32Model lower_to_f32(const Ensemble& ensemble);

// Throws Error(dimension) unless input.size() == feature_count and
// Error(argument) on non-finite input.
float infer_f32(const F32Model& model, std::span<const float> input);

// Local node index of the leaf reached in every tree.
std::vector<std::size_t> leaf_path_f32(const F32Model& model, std::span<const float> input);
std::vector<std::size_t> leaf_path(const Ensemble& ensemble, std::span<const double> input);

F32Input to_f32_input(const FeatureVector& row);

std::vector<float> infer_f32_batch(const F32Model& model, const std::vector<F32Input>& rows);
std::vector<float> infer_f32_batch_serial(const F32Model& model, const std::vector<F32Input>& rows);

inline constexpr double kParityEps = 1e-6;

struct ParityReport {
  double mape_pct = 0.0;
  double rmse = 0.0;
  std::size_t n = 0;
  double max_abs_diff = 0.0;
};

// mape_pct = 100/n * sum |a_i - b_i| / max(|a_i|, eps).
ParityReport parity_report(std::span<const double> full_precision, std::span<const double> edge,
                           double eps = kParityEps);

// Fraction of pairs whose 6-significant-digit renderings are identical.
double display_agreement(std::span<const double> a, std::span<const double> b, int significant_digits = 6);

struct LatencyStats {
  std::size_t n_inputs = 0;
  unsigned repetitions = 0;
  double mean_us = 0.0;
  double median_us = 0.0;
  double p99_us = 0.0;
  double min_us = 0.0;
  double max_us = 0.0;
};

// Times single-sample calls (input copy + infer_f32) on the calling thread
// over inputs x repetitions after one untimed warm-up sweep.
LatencyStats latency_bench(const F32Model& model, const std::vector<F32Input>& inputs, unsigned repetitions);

// Nearest-rank summary of raw per-call samples (microseconds).
LatencyStats summarize_latencies(std::vector<double> samples_us, std::size_t n_inputs, unsigned repetitions);

}  // namespace pvedge
