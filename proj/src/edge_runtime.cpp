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

#include "pvedge/edge_runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/core.h>

namespace pvedge {
namespace {

float to_f32(double v, std::string_view what) {
  const auto f = static_cast<float>(v);
  if (!std::isfinite(f))
    throw Error(ErrorKind::lowering, fmt::format("{} = {} is outside the float32 range", what, v));
  return f;
}

void check_input(const F32Model& model, std::span<const float> input) {
  if (input.size() != model.feature_count)
    throw Error(ErrorKind::dimension,
                fmt::format("Input data must contain exactly {} elements (got {}).", model.feature_count, input.size()));
  for (std::size_t i = 0; i < input.size(); ++i)
    if (!std::isfinite(input[i])) throw Error(ErrorKind::argument, fmt::format("input[{}] is not finite", i));
}

inline std::uint32_t route(const F32Model& m, std::uint32_t at, const float* x) {
  while (!m.is_leaf[at]) at = x[m.feature[at]] <= m.value[at] ? m.true_child[at] : m.false_child[at];
  return at;
}

// Tree order 0..K-1, base score first.
inline float accumulate(const F32Model& m, const float* x) {
  float acc = m.base_score;
  for (std::uint32_t root : m.roots) acc += m.value[route(m, root, x)];
  return acc;
}

}  // namespace

F32Model lower_to_f32(const Ensemble& ensemble) {
  F32Model m;
  m.feature_count = ensemble.feature_count;
  m.target = ensemble.target;
  m.base_score = to_f32(ensemble.base_score, "base_score");
  for (std::size_t t = 0; t < ensemble.trees.size(); ++t) {
    const auto& tree = ensemble.trees[t];
    const auto problems = check_tree(tree, ensemble.feature_count);
    if (!problems.empty()) throw Error(ErrorKind::validation, fmt::format("tree {}: {}", t, problems.front()));
    const auto offset = static_cast<std::uint32_t>(m.value.size());
    m.roots.push_back(offset);
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      if (const auto* b = std::get_if<Branch>(&tree.nodes[i])) {
        m.feature.push_back(static_cast<std::uint32_t>(b->feature));
        m.value.push_back(to_f32(b->threshold, fmt::format("tree {} node {} threshold", t, i)));
        m.true_child.push_back(offset + static_cast<std::uint32_t>(b->left));
        m.false_child.push_back(offset + static_cast<std::uint32_t>(b->right));
        m.is_leaf.push_back(0);
      } else {
        m.feature.push_back(0);
        m.value.push_back(to_f32(std::get<Leaf>(tree.nodes[i]).weight, fmt::format("tree {} node {} weight", t, i)));
        m.true_child.push_back(0);
        m.false_child.push_back(0);
        m.is_leaf.push_back(1);
      }
    }
  }
  return m;
}

F32Model lower_to_f32(const ModelArtifact& artifact) { return lower_to_f32(to_ensemble(artifact)); }

float infer_f32(const F32Model& model, std::span<const float> input) {
  check_input(model, input);
  return accumulate(model, input.data());
}

std::vector<std::size_t> leaf_path_f32(const F32Model& model, std::span<const float> input) {
  check_input(model, input);
  std::vector<std::size_t> out;
  out.reserve(model.roots.size());
  for (std::uint32_t root : model.roots) out.push_back(route(model, root, input.data()) - root);
  return out;
}

std::vector<std::size_t> leaf_path(const Ensemble& ensemble, std::span<const double> input) {
  if (input.size() != ensemble.feature_count)
    throw Error(ErrorKind::dimension, fmt::format("Input data must contain exactly {} elements (got {}).",
                                                  ensemble.feature_count, input.size()));
  std::vector<std::size_t> out;
  out.reserve(ensemble.trees.size());
  for (const auto& tree : ensemble.trees) out.push_back(tree.route(input));
  return out;
}

F32Input to_f32_input(const FeatureVector& row) {
  F32Input out;
  for (std::size_t i = 0; i < kFeatureCount; ++i) out[i] = static_cast<float>(row[i]);
  return out;
}

std::vector<float> infer_f32_batch(const F32Model& model, const std::vector<F32Input>& rows) {
  if (model.feature_count != kFeatureCount)
    throw Error(ErrorKind::dimension, fmt::format("Input data must contain exactly {} elements (got {}).",
                                                  model.feature_count, kFeatureCount));
  for (const auto& r : rows) check_input(model, r);
  std::vector<float> out(rows.size());
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    out[u] = accumulate(model, rows[u].data());
  }
  return out;
}

std::vector<float> infer_f32_batch_serial(const F32Model& model, const std::vector<F32Input>& rows) {
  std::vector<float> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(infer_f32(model, r));
  return out;
}

ParityReport parity_report(std::span<const double> a, std::span<const double> b, double eps) {
  if (a.size() != b.size())
    throw Error(ErrorKind::argument, fmt::format("length mismatch: {} vs {}", a.size(), b.size()));
  if (a.empty()) throw Error(ErrorKind::argument, "parity_report needs at least one pair");
  if (!(eps > 0.0)) throw Error(ErrorKind::argument, "eps must be positive");
  ParityReport r;
  r.n = a.size();
  double rel = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    rel += d / std::max(std::abs(a[i]), eps);
    sq += d * d;
    r.max_abs_diff = std::max(r.max_abs_diff, d);
  }
  const auto n = static_cast<double>(r.n);
  r.mape_pct = 100.0 * rel / n;
  r.rmse = std::sqrt(sq / n);
  return r;
}

double display_agreement(std::span<const double> a, std::span<const double> b, int digits) {
  if (a.size() != b.size() || a.empty())
    throw Error(ErrorKind::argument, "display_agreement needs two equal, non-empty streams");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (fmt::format("{:.{}g}", a[i], digits) == fmt::format("{:.{}g}", b[i], digits)) ++same;
  return static_cast<double>(same) / static_cast<double>(a.size());
}

LatencyStats summarize_latencies(std::vector<double> samples, std::size_t n_inputs, unsigned repetitions) {
  LatencyStats s;
  s.n_inputs = n_inputs;
  s.repetitions = repetitions;
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  const auto rank = [&](double p) {
    const auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(samples.size())));
    return samples[std::clamp<std::size_t>(k, 1, samples.size()) - 1];
  };
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.min_us = samples.front();
  s.max_us = samples.back();
  s.median_us = rank(0.50);
  s.p99_us = rank(0.99);
  s.mean_us = std::clamp(sum / static_cast<double>(samples.size()), s.min_us, s.max_us);
  return s;
}

LatencyStats latency_bench(const F32Model& model, const std::vector<F32Input>& inputs, unsigned repetitions) {
  if (repetitions < 1) throw Error(ErrorKind::argument, "repetitions must be >= 1");
  if (inputs.empty()) throw Error(ErrorKind::argument, "latency_bench needs at least one input");
  using clock = std::chrono::steady_clock;
  // One clock tick is the smallest duration we can claim to have measured.
  constexpr double tick_us = 1e6 * static_cast<double>(clock::period::num) / static_cast<double>(clock::period::den);

  volatile float sink = 0.0f;
  for (const auto& row : inputs) sink = sink + infer_f32(model, row);

  std::vector<double> samples;
  samples.reserve(inputs.size() * repetitions);
  for (unsigned rep = 0; rep < repetitions; ++rep) {
    for (const auto& row : inputs) {
      const auto start = clock::now();
      const std::vector<float> tensor(row.begin(), row.end());
      const float y = infer_f32(model, tensor);
      const auto stop = clock::now();
      sink = sink + y;
      const double us = std::chrono::duration<double, std::micro>(stop - start).count();
      samples.push_back(std::max(us, tick_us));
    }
  }
  return summarize_latencies(std::move(samples), inputs.size(), repetitions);
}

}  // namespace pvedge
