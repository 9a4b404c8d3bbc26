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

// Parallel kernels against their serial references.

#include <numeric>
#include <vector>

#include <benchmark/benchmark.h>

#include "pvedge/dataset.hpp"
#include "pvedge/edge_runtime.hpp"
#include "pvedge/gbdt.hpp"

namespace {

using namespace pvedge;

struct Fixture {
  InverterDataset data = clean(synth_generate(30, 10.0, 1));
  ColumnMatrix x{feature_rows(data.records)};
  std::vector<GradPair> grads;
  std::vector<std::size_t> idx;
  Ensemble model;
  F32Model f32;
  std::vector<FeatureVector> rows = feature_rows(data.records);
  std::vector<F32Input> rows_f32;

  Fixture() {
    const auto y = labels(data.records, Target::active);
    grads = compute_gradients(y, std::vector<double>(y.size(), 0.0));
    idx.resize(y.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    model = train(x, y, Target::active, Hyperparams{});
    f32 = lower_to_f32(model);
    for (const auto& r : rows) rows_f32.push_back(to_f32_input(r));
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_FindBestSplit(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(find_best_split(f.idx, f.x, f.grads, Hyperparams{}));
}
BENCHMARK(BM_FindBestSplit);

void BM_FindBestSplitSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(find_best_split_serial(f.idx, f.x, f.grads, Hyperparams{}));
}
BENCHMARK(BM_FindBestSplitSerial);

void BM_PredictBatch(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(predict_batch(f.model, f.rows));
}
BENCHMARK(BM_PredictBatch);

void BM_PredictBatchSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(predict_batch_serial(f.model, f.rows));
}
BENCHMARK(BM_PredictBatchSerial);

void BM_InferF32Batch(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(infer_f32_batch(f.f32, f.rows_f32));
}
BENCHMARK(BM_InferF32Batch);

void BM_InferF32BatchSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(infer_f32_batch_serial(f.f32, f.rows_f32));
}
BENCHMARK(BM_InferF32BatchSerial);

void BM_InferF32Single(benchmark::State& state) {
  const auto& f = fixture();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(infer_f32(f.f32, f.rows_f32[i]));
    i = (i + 1) % f.rows_f32.size();
  }
}
BENCHMARK(BM_InferF32Single);

}  // namespace

BENCHMARK_MAIN();
