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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "pvedge/dataset.hpp"
#include "pvedge/edge_runtime.hpp"
#include "pvedge/gbdt.hpp"
#include "pvedge/linear.hpp"
#include "pvedge/metrics.hpp"
#include "pvedge/model_format.hpp"
#include "support/oracles.hpp"

namespace pvedge {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Six inverters, both targets, trained once and shared by AC5, AC7, AC8, AC9.
struct FleetModel {
  int inverter = 0;
  Target target = Target::active;
  double capacity = 0.0;
  SplitDataset data;
  Ensemble ensemble;
  LinearModel ols;
};

constexpr std::uint64_t kSplitSeed = 42;

std::vector<FleetModel> train_fleet() {
  std::vector<FleetModel> fleet;
  for (int inv = 1; inv <= 6; ++inv) {
    SynthOptions opt;
    opt.n_days = 30;
    opt.capacity = 10.0;
    opt.seed = static_cast<std::uint64_t>(inv);
    opt.inverter_id = inv;
    const auto cleaned = clean(synth_generate(opt));
    const auto parts = split(cleaned, 0.8, kSplitSeed);
    for (Target target : {Target::active, Target::reactive}) {
      FleetModel m;
      m.inverter = inv;
      m.target = target;
      m.capacity = opt.capacity;
      m.data = parts;
      m.ensemble = train(parts, target, Hyperparams{});
      m.ols = fit_ols(feature_rows(parts.train), labels(parts.train, target));
      fleet.push_back(std::move(m));
    }
  }
  return fleet;
}

Outcome ac1_split_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  int matched = 0, found = 0;
  double worst = 0.0;
  std::string first_mismatch;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 64)(rng);
    const std::size_t nf = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
    // Half the instances draw from a small grid so duplicate values occur.
    const bool gridded = trial % 2 == 0;
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::vector<std::vector<double>> cols(nf, std::vector<double>(n));
    ColumnMatrix x(n, nf);
    for (std::size_t f = 0; f < nf; ++f)
      for (std::size_t i = 0; i < n; ++i) {
        cols[f][i] = gridded ? std::uniform_int_distribution<int>(0, 9)(rng) * 0.37 : u(rng);
        x.at(i, f) = cols[f][i];
      }
    std::vector<double> y(n), pred(n, 0.0), h(n, 1.0), g(n);
    for (auto& v : y) v = u(rng);
    const auto gp = compute_gradients(y, pred);
    for (std::size_t i = 0; i < n; ++i) g[i] = gp[i].g;
    Hyperparams p;
    p.lambda = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    p.gamma = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    p.min_child_weight = std::uniform_int_distribution<int>(0, 4)(rng);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;

    const auto want = testing::brute_force_split(cols, g, h, p.lambda, p.gamma, p.min_child_weight);
    const auto got = find_best_split(idx, x, gp, p);
    bool ok = got.has_value() == want.has_value();
    if (ok && want) {
      ++found;
      const double d = std::abs(got->gain - want->gain);
      worst = std::max(worst, d);
      ok = got->feature == want->feature && got->threshold == want->threshold && d <= 1e-12;
    }
    if (ok) ++matched;
    else if (first_mismatch.empty()) first_mismatch = fmt::format(" first mismatch: instance {}", trial);
  }
  const double secs = seconds_since(t0);
  return {matched == 200 && secs < 5.0,
          fmt::format("{}/200 instances match brute force ({} with a split), max |gain diff| = {:.3g}, {:.2f} s{}",
                      matched, found, worst, secs, first_mismatch)};
}

Outcome ac2_objective_monotone() {
  std::size_t violations = 0, checks = 0;
  Hyperparams p;
  p.num_trees = 50;
  p.gamma = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto ds = clean(synth_generate(30, 10.0, 1000 + seed));
    const ColumnMatrix x(feature_rows(ds.records));
    for (Target target : {Target::active, Target::reactive}) {
      const auto e = train(x, labels(ds.records, target), target, p);
      double prev = objective_value(truncated(e, 0), ds.records, p);
      for (std::size_t m = 1; m <= p.num_trees; ++m) {
        const double cur = objective_value(truncated(e, m), ds.records, p);
        ++checks;
        if (cur > prev) ++violations;
        prev = cur;
      }
    }
  }
  return {violations == 0,
          fmt::format("{} violations in {} round-to-round checks (10 datasets x 2 targets x 50 rounds)", violations,
                      checks)};
}

Outcome ac3_closed_form() {
  std::mt19937_64 rng(3);
  double worst = 0.0;
  int cases = 0;
  const auto check = [&](const std::vector<FeatureVector>& rows, const std::vector<double>& y, double lambda) {
    Hyperparams p;
    p.num_trees = 1;
    p.max_depth = 0;
    p.learning_rate = 1.0;
    p.lambda = lambda;
    const auto e = train(ColumnMatrix(rows), y, Target::active, p);
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    for (const auto& r : rows) worst = std::max(worst, std::abs(predict(e, r) - mean));
    ++cases;
  };
  for (int k = 0; k < 20; ++k) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 300)(rng);
    std::vector<FeatureVector> rows(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : rows[i]) v = std::uniform_real_distribution<double>(-1, 1)(rng);
      y[i] = std::uniform_real_distribution<double>(-50, 50)(rng);
    }
    check(rows, y, 0.0);
    check(rows, y, 1.0);
  }
  const auto ds = clean(synth_generate(30, 10.0, 7));
  check(feature_rows(ds.records), labels(ds.records, Target::active), 1.0);
  check(feature_rows(ds.records), labels(ds.records, Target::reactive), 1.0);
  return {worst <= 1e-12, fmt::format("{} cases, max |prediction - label mean| = {:.3g}", cases, worst)};
}

Outcome ac4_metrics() {
  struct Case {
    const char* name;
    double got;
    double want;
  };
  const std::vector<double> y1 = {1, 2, 3}, p1 = {1, 2, 4};
  const std::vector<double> y2 = {5}, p2 = {4};
  const std::vector<double> y3 = {2, 4, 6, 8}, p3 = {2, 4, 6, 8};
  const std::vector<double> y4 = {0, 0, 0, 0}, p4 = {1, -1, 1, -1};
  const std::vector<double> y5 = {3, 5}, p5 = {4, 4};
  const std::vector<Case> cases = {
      {"r2([1,2,3],[1,2,4])", r_squared(y1, p1), 0.5},
      {"mape([5],[4],10)", capacity_mape(y2, p2, 10.0), 10.0},
      {"r2(perfect)", r_squared(y3, p3), 1.0},
      {"mape(perfect)", capacity_mape(y3, p3, 10.0), 0.0},
      {"mape(+-1,cap 4)", capacity_mape(y4, p4, 4.0), 25.0},
      {"r2([3,5],[4,4])", r_squared(y5, p5), 0.0},
  };
  double worst = 0.0;
  std::string bad;
  for (const auto& c : cases) {
    const double d = std::abs(c.got - c.want);
    worst = std::max(worst, d);
    if (!(d <= 1e-12)) bad += fmt::format(" {}={}", c.name, c.got);
  }
  return {bad.empty(), fmt::format("{} hand cases, max error {:.3g}{}", cases.size(), worst, bad)};
}

Outcome ac5_baselines(const std::vector<FleetModel>& fleet, double train_secs) {
  const auto t0 = Clock::now();
  int ok = 0;
  std::string lines;
  for (const auto& m : fleet) {
    const auto y = labels(m.data.test, m.target);
    const auto gb = evaluate(y, predict_batch(m.ensemble, feature_rows(m.data.test)), m.capacity);
    std::vector<double> lr_pred;
    for (const auto& r : m.data.test) lr_pred.push_back(predict_linear(m.ols, r.features));
    const auto lr = evaluate(y, lr_pred, m.capacity);
    const bool pass = gb.r_squared > lr.r_squared && gb.r_squared >= 0.95 && gb.mape_pct <= 5.0;
    if (pass) ++ok;
    lines += fmt::format("    inverter {} {:<8} gbdt R2 {:.4f} MAPE {:.2f}% | ols R2 {:.4f} MAPE {:.2f}%{}\n", m.inverter,
                         to_string(m.target), gb.r_squared, gb.mape_pct, lr.r_squared, lr.mape_pct,
                         pass ? "" : "  <-- fails");
  }
  const double secs = train_secs + seconds_since(t0);
  fmt::print("{}", lines);
  const int total = static_cast<int>(fleet.size());
  return {ok == total && secs < 60.0,
          fmt::format("{}/{} models (6 inverters x 2 targets) beat OLS with R2 >= 0.95 and MAPE <= 5%, {:.1f} s", ok,
                      total, secs)};
}

Outcome ac6_round_trip() {
  std::mt19937_64 rng(6);
  int identical = 0, deterministic = 0;
  for (int k = 0; k < 20; ++k) {
    const auto e = testing::random_ensemble(rng, 1 + k * 5, 1 + k % 7);
    ArtifactMetadata meta;
    meta.inverter_id = k;
    meta.capacity = 10.0;
    meta.created_at = "2024-01-01T00:00:00Z";
    const auto text = serialize(export_model(e, meta));
    const auto back = import_model(text);
    bool same = true;
    for (int i = 0; i < 1000 && same; ++i) {
      const auto x = testing::random_input(rng);
      const double a = predict(e, x), b = predict(back.ensemble, x);
      same = std::memcmp(&a, &b, sizeof a) == 0;
    }
    if (same) ++identical;
    if (serialize(export_model(e, meta)) == text && serialize(export_model(back.ensemble, back.metadata)) == text)
      ++deterministic;
  }
  return {identical == 20 && deterministic == 20,
          fmt::format("{}/20 ensembles bit-identical on 1000 inputs, {}/20 with deterministic bytes", identical,
                      deterministic)};
}

struct ParityRow {
  const FleetModel* model;
  ParityReport report;
  double agreement;
};

std::vector<ParityRow> parity_rows(const std::vector<FleetModel>& fleet) {
  std::vector<ParityRow> rows;
  for (const auto& m : fleet) {
    const auto f32 = lower_to_f32(m.ensemble);
    std::vector<double> ref, edge;
    for (const auto& r : m.data.test) {
      ref.push_back(predict(m.ensemble, r.features));
      edge.push_back(infer_f32(f32, to_f32_input(r.features)));
    }
    rows.push_back({&m, parity_report(ref, edge), display_agreement(ref, edge, 6)});
  }
  return rows;
}

Outcome ac7_parity(const std::vector<ParityRow>& rows) {
  fmt::print("    PREDICTION RESULTS COMPARISON: F64 VS. F32\n");
  fmt::print("    {:<14}{:<10}{:>12}{:>22}{:>16}{:>8}\n", "Inverter No.", "Target", "MAPE", "RMSE", "Max |diff|", "n");
  std::size_t min_n = std::numeric_limits<std::size_t>::max();
  double worst_rmse = 0.0, worst_diff = 0.0;
  for (const auto& r : rows) {
    fmt::print("    {:<14}{:<10}{:>11.4f}%{:>22.15f}{:>16.3e}{:>8}\n", r.model->inverter, to_string(r.model->target),
               r.report.mape_pct, r.report.rmse, r.report.max_abs_diff, r.report.n);
    min_n = std::min(min_n, r.report.n);
    worst_rmse = std::max(worst_rmse, r.report.rmse);
    worst_diff = std::max(worst_diff, r.report.max_abs_diff);
  }
  return {min_n >= 500 && worst_rmse <= 1e-4 && worst_diff <= 1e-3,
          fmt::format("{} models, >= {} test rows each, worst RMSE {:.3g} (<= 1e-4), worst max_abs_diff {:.3g} (<= 1e-3)",
                      rows.size(), min_n, worst_rmse, worst_diff)};
}

Outcome ac8_display(const std::vector<ParityRow>& rows) {
  std::size_t agree = 0, total = 0;
  std::string per_model;
  for (const auto& r : rows) {
    agree += static_cast<std::size_t>(std::llround(r.agreement * static_cast<double>(r.report.n)));
    total += r.report.n;
    per_model += fmt::format(" {}{}={:.1f}%", r.model->inverter, r.model->target == Target::active ? "P" : "Q",
                             100.0 * r.agreement);
  }
  const double frac = static_cast<double>(agree) / static_cast<double>(total);
  return {frac >= 0.99, fmt::format("{}/{} pairs ({:.2f}%) agree at 6 significant digits (need >= 99%);{}", agree,
                                    total, 100.0 * frac, per_model)};
}

Outcome ac9_latency(const std::vector<FleetModel>& fleet) {
  const auto t0 = Clock::now();
  const auto& m = fleet.front();
  std::size_t depth = 0;
  for (const auto& t : m.ensemble.trees) depth = std::max(depth, t.depth());
  const auto f32 = lower_to_f32(m.ensemble);
  std::vector<F32Input> inputs;
  for (const auto& r : m.data.test) inputs.push_back(to_f32_input(r.features));
  const auto s = latency_bench(f32, inputs, 20);
  const double secs = seconds_since(t0);
  const bool ordered = s.min_us <= s.median_us && s.median_us <= s.p99_us && s.p99_us <= s.max_us;
  return {m.ensemble.trees.size() == 100 && depth <= 6 && s.median_us < 1000.0 && ordered && secs < 30.0,
          fmt::format("K={} depth<={} over {} inputs x 20 reps: min {:.3f} median {:.3f} p99 {:.3f} max {:.3f} us, "
                      "{:.2f} s",
                      m.ensemble.trees.size(), depth, s.n_inputs, s.min_us, s.median_us, s.p99_us, s.max_us, secs)};
}

Outcome ac10_input_contract(const std::vector<FleetModel>& fleet) {
  const auto& m = fleet.front();
  const auto f32 = lower_to_f32(m.ensemble);
  int calls = 0, dimension_errors = 0;
  const auto expect_dimension = [&](const std::function<void()>& fn) {
    ++calls;
    try {
      fn();
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::dimension) ++dimension_errors;
    }
  };
  for (std::size_t n : {0u, 1u, 11u, 13u, 24u}) {
    const std::vector<double> xd(n, 1.0);
    const std::vector<float> xf(n, 1.0f);
    expect_dimension([&] { predict(m.ensemble, xd); });
    expect_dimension([&] { infer_f32(f32, xf); });
    expect_dimension([&] { leaf_path(m.ensemble, xd); });
    expect_dimension([&] { leaf_path_f32(f32, xf); });
    expect_dimension([&] { predict_linear(m.ols, xd); });
  }

  // Fuzz: mutate exported artifacts; whatever still validates must route in bounds.
  std::mt19937_64 rng(10);
  ArtifactMetadata meta;
  meta.capacity = 10.0;
  std::size_t accepted = 0, rejected = 0, bad_routes = 0;
  for (int round = 0; round < 2000; ++round) {
    ModelArtifact a = export_model(testing::random_ensemble(rng, 4, 4), meta);
    const int edits = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int k = 0; k < edits; ++k) {
      const std::size_t n = a.node_count();
      const std::size_t i = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
      const std::uint64_t id = std::uniform_int_distribution<std::uint64_t>(0, n + 2)(rng);
      switch (std::uniform_int_distribution<int>(0, 6)(rng)) {
        case 0: a.nodes_truenodeids[i] = id; break;
        case 1: a.nodes_falsenodeids[i] = id; break;
        case 2: a.nodes_featureids[i] = std::uniform_int_distribution<std::uint64_t>(0, 13)(rng); break;
        case 3: a.nodes_modes[i] = a.nodes_modes[i] == NodeMode::leaf ? NodeMode::branch_leq : NodeMode::leaf; break;
        case 4: a.nodes_nodeids[i] = id; break;
        case 5: std::swap(a.nodes_truenodeids[i], a.nodes_falsenodeids[i]); break;
        default: a.nodes_treeids[i] = std::uniform_int_distribution<std::uint64_t>(0, 4)(rng); break;
      }
    }
    if (!validate(a).empty()) {
      ++rejected;
      continue;
    }
    ++accepted;
    const Ensemble e = to_ensemble(a);
    const F32Model lowered = lower_to_f32(e);
    for (int k = 0; k < 20; ++k) {
      const auto x = testing::random_input(rng);
      std::vector<float> xf(x.begin(), x.end());
      const auto p64 = leaf_path(e, x);
      const auto p32 = leaf_path_f32(lowered, xf);
      for (std::size_t t = 0; t < e.trees.size(); ++t) {
        const auto& nodes = e.trees[t].nodes;
        if (p64[t] >= nodes.size() || !std::holds_alternative<Leaf>(nodes[p64[t]]) || p32[t] >= nodes.size() ||
            !std::holds_alternative<Leaf>(nodes[p32[t]]))
          ++bad_routes;
      }
    }
  }
  return {dimension_errors == calls && bad_routes == 0 && accepted > 0,
          fmt::format("{}/{} wrong-width calls raised the dimension error; fuzz: {} mutants accepted, {} rejected, "
                      "{} out-of-bounds routes",
                      dimension_errors, calls, accepted, rejected, bad_routes)};
}

}  // namespace
}  // namespace pvedge

int main() {
  using namespace pvedge;
  int failures = 0;
  const auto report = [&](int id, const char* title, const Outcome& o) {
    if (!o.pass) ++failures;
    fmt::print("AC{} {} {}: {}\n", id, o.pass ? "PASS" : "FAIL", title, o.detail);
    std::fflush(stdout);
  };
  report(1, "split search matches brute force", ac1_split_oracle());
  report(2, "objective non-increasing over rounds", ac2_objective_monotone());
  report(3, "depth-0 single tree predicts the label mean", ac3_closed_form());
  report(4, "metric hand cases", ac4_metrics());

  const auto t0 = Clock::now();
  const auto fleet = train_fleet();
  const double train_secs = seconds_since(t0);
  report(5, "GBDT beats OLS on six inverters", ac5_baselines(fleet, train_secs));
  report(6, "export/import round trip", ac6_round_trip());
  const auto parity = parity_rows(fleet);
  report(7, "f64 vs f32 parity", ac7_parity(parity));
  report(8, "6-significant-digit display agreement", ac8_display(parity));
  report(9, "single-sample f32 latency", ac9_latency(fleet));
  report(10, "input contract and fuzzed artifacts", ac10_input_contract(fleet));
  fmt::print("{} of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
