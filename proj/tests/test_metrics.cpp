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

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "pvedge/common.hpp"
#include "pvedge/metrics.hpp"

namespace pvedge {
namespace {

using V = std::vector<double>;

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::io;
}

TEST(RSquared, HandCases) {
  EXPECT_EQ(r_squared(V{1, 2, 3}, V{1, 2, 3}), 1.0);
  EXPECT_EQ(r_squared(V{1, 2, 3}, V{2, 2, 2}), 0.0);
  EXPECT_NEAR(r_squared(V{1, 2, 3}, V{1, 2, 4}), 0.5, 1e-12);
}

TEST(RSquared, NegativeOnBadPredictions) { EXPECT_LT(r_squared(V{1, 2, 3}, V{3, 2, 1}), 0.0); }

TEST(RSquared, Errors) {
  EXPECT_EQ(kind_of([] { r_squared(V{2, 2, 2}, V{1, 2, 3}); }), ErrorKind::undefined_variance);
  EXPECT_EQ(kind_of([] { r_squared(V{1}, V{1}); }), ErrorKind::argument);
  EXPECT_EQ(kind_of([] { r_squared(V{1, 2}, V{1}); }), ErrorKind::argument);
}

TEST(CapacityMape, HandCases) {
  EXPECT_EQ(capacity_mape(V{1, 2}, V{1, 2}, 10), 0.0);
  EXPECT_NEAR(capacity_mape(V{5}, V{4}, 10), 10.0, 1e-12);
  EXPECT_NEAR(capacity_mape(V{0, 0}, V{3, 4}, 10), 100.0 * std::sqrt(12.5) / 10.0, 1e-12);
  EXPECT_NEAR(capacity_mape(V{0, 0}, V{3, 4}, 10), 35.35533905932738, 1e-12);
}

TEST(CapacityMape, Errors) {
  EXPECT_EQ(kind_of([] { capacity_mape(V{1}, V{1}, 0.0); }), ErrorKind::argument);
  EXPECT_EQ(kind_of([] { capacity_mape(V{1}, V{1}, -3.0); }), ErrorKind::argument);
}

TEST(CapacityMape, LiteralFormula) {
  // (1 - sqrt(mean((y - yhat)^2) / cap)) * 100 with Cap inside the root.
  EXPECT_NEAR(capacity_mape_literal(V{5}, V{4}, 10), (1.0 - std::sqrt(0.1)) * 100.0, 1e-12);
  EXPECT_EQ(capacity_mape_literal(V{1, 2}, V{1, 2}, 10), 100.0);
}

TEST(Rmse, HandCases) {
  EXPECT_EQ(rmse(V{1, 2}, V{1, 2}), 0.0);
  EXPECT_NEAR(rmse(V{0, 0}, V{3, 4}), 3.5355339059327378, 1e-12);
  EXPECT_EQ(rmse(V{1}, V{2}), 1.0);
  EXPECT_EQ(kind_of([] { rmse(V{1, 2}, V{1}); }), ErrorKind::argument);
  EXPECT_EQ(kind_of([] { rmse(V{}, V{}); }), ErrorKind::argument);
}

class MetricProperties : public ::testing::TestWithParam<int> {};

TEST_P(MetricProperties, Invariants) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(GetParam()));
  std::normal_distribution<double> z(0.0, 3.0);
  const std::size_t n = 2 + static_cast<std::size_t>(GetParam()) * 7;
  V y(n), a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = z(rng);
    a[i] = y[i] + 0.3 * z(rng);
    b[i] = y[i] + 0.3 * z(rng);
  }
  const double cap = 10.0;
  EXPECT_LE(r_squared(y, a), 1.0);
  EXPECT_LT(r_squared(y, a), 1.0);
  EXPECT_EQ(capacity_mape(y, a, cap), 100.0 * rmse(y, a) / cap);

  const double c = 7.5;
  V ys(y), as(a);
  for (auto& v : ys) v += c;
  for (auto& v : as) v += c;
  EXPECT_NEAR(rmse(ys, as), rmse(y, a), 1e-12);
  EXPECT_NEAR(capacity_mape(ys, as, cap), capacity_mape(y, a, cap), 1e-10);
  EXPECT_NEAR(r_squared(ys, as), r_squared(y, a), 1e-10);

  EXPECT_LE(rmse(y, b), rmse(y, a) + rmse(a, b) + 1e-12);
  EXPECT_EQ(rmse(a, b), rmse(b, a));
}

INSTANTIATE_TEST_SUITE_P(Seeds, MetricProperties, ::testing::Range(1, 21));

TEST(Evaluate, Report) {
  const auto r = evaluate(V{1, 2, 3}, V{1, 2, 4}, 10.0);
  EXPECT_NEAR(r.r_squared, 0.5, 1e-12);
  EXPECT_NEAR(r.rmse, std::sqrt(1.0 / 3.0), 1e-12);
  EXPECT_NEAR(r.mape_pct, 10.0 * std::sqrt(1.0 / 3.0), 1e-12);
  EXPECT_EQ(r.n, 3u);
  const auto lit = evaluate(V{1, 2, 3}, V{1, 2, 4}, 10.0, true);
  EXPECT_NEAR(lit.mape_pct, (1.0 - std::sqrt(1.0 / 30.0)) * 100.0, 1e-12);
  const auto text = to_text(r);
  EXPECT_NE(text.find("r_squared = 0.500000"), std::string::npos) << text;
  EXPECT_NE(text.find("n = 3"), std::string::npos) << text;
}

}  // namespace
}  // namespace pvedge
