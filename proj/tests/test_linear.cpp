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

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "pvedge/linear.hpp"

namespace pvedge {
namespace {

// Ridge on centered data, solved with a rank-revealing QR of the augmented
// least-squares system [Xc; sqrt(eps) I] w = [yc; 0].
struct RidgeOracle {
  Eigen::VectorXd w;
  double b = 0.0;
};

RidgeOracle ridge_oracle(const std::vector<FeatureVector>& rows, const std::vector<double>& y, double eps) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index d = kFeatureCount;
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd yy(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < d; ++c) x(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
    yy(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::RowVectorXd mx = x.colwise().mean();
  const double my = yy.mean();
  Eigen::MatrixXd a(n + d, d);
  a.topRows(n) = x.rowwise() - mx;
  a.bottomRows(d) = std::sqrt(eps) * Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + d);
  rhs.head(n) = yy.array() - my;
  RidgeOracle o;
  o.w = a.colPivHouseholderQr().solve(rhs);
  o.b = my - mx.dot(o.w);
  return o;
}

std::vector<FeatureVector> random_rows(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<FeatureVector> rows(n);
  for (auto& r : rows)
    for (auto& v : r) v = z(rng);
  return rows;
}

TEST(FitOls, RecoversExactLine) {
  std::vector<FeatureVector> rows(50);
  std::vector<double> y(50);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i] = {};
    rows[i][0] = 0.1 * static_cast<double>(i);
    y[i] = 2.0 * rows[i][0] + 1.0;
  }
  const auto m = fit_ols(rows, y);
  EXPECT_NEAR(m.weights[0], 2.0, 1e-8);
  EXPECT_NEAR(m.intercept, 1.0, 1e-8);
  for (std::size_t c = 1; c < kFeatureCount; ++c) EXPECT_EQ(m.weights[c], 0.0);
}

TEST(FitOls, ConstantLabelsGiveZeroWeights) {
  std::mt19937_64 rng(1);
  const auto rows = random_rows(rng, 40);
  const std::vector<double> y(rows.size(), 4.5);
  const auto m = fit_ols(rows, y);
  for (double w : m.weights) EXPECT_NEAR(w, 0.0, 1e-12);
  EXPECT_NEAR(m.intercept, 4.5, 1e-12);
}

TEST(FitOls, MatchesIndependentSolverWhenWellConditioned) {
  std::mt19937_64 rng(2);
  const auto rows = random_rows(rng, 300);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<double> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    y[i] = 3.0 + noise(rng);
    for (std::size_t c = 0; c < kFeatureCount; ++c) y[i] += (static_cast<double>(c) - 5.0) * rows[i][c];
  }
  const auto m = fit_ols(rows, y, 0.0);
  const auto o = ridge_oracle(rows, y, 0.0);
  for (std::size_t c = 0; c < kFeatureCount; ++c) EXPECT_NEAR(m.weights[c], o.w(static_cast<Eigen::Index>(c)), 1e-10);
  EXPECT_NEAR(m.intercept, o.b, 1e-10);
}

TEST(FitOls, ResidualsOrthogonalToFeatures) {
  std::mt19937_64 rng(3);
  const auto rows = random_rows(rng, 500);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> y(rows.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    y[i] = std::sin(rows[i][0]) + rows[i][1] * rows[i][2] + u(rng);
    norm += y[i] * y[i];
  }
  norm = std::sqrt(norm);
  const auto m = fit_ols(rows, y, 0.0);
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    double dot = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) dot += rows[i][c] * (y[i] - predict_linear(m, rows[i]));
    EXPECT_LE(std::abs(dot), 1e-6 * norm) << "feature " << c;
  }
}

TEST(FitOls, DuplicatedColumnsFallBackToRidge) {
  std::mt19937_64 rng(4);
  auto rows = random_rows(rng, 200);
  for (auto& r : rows) {
    r[5] = r[4];
    r[9] = r[4];
  }
  std::vector<double> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) y[i] = 1.5 * rows[i][4] - rows[i][0] + 0.25;
  for (double eps : {kDefaultRidgeEps, 1e-3}) {
    const auto m = fit_ols(rows, y, eps);
    for (double w : m.weights) EXPECT_TRUE(std::isfinite(w));
    const auto o = ridge_oracle(rows, y, eps);
    // Compare in prediction space; the weight split among the copies is
    // ill-conditioned at tiny eps.
    double ours = 0.0, theirs = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double po = o.b;
      for (std::size_t c = 0; c < kFeatureCount; ++c) po += o.w(static_cast<Eigen::Index>(c)) * rows[i][c];
      const double pm = predict_linear(m, rows[i]);
      EXPECT_NEAR(pm, po, 1e-6) << "eps " << eps << " row " << i;
      ours += (y[i] - pm) * (y[i] - pm);
      theirs += (y[i] - po) * (y[i] - po);
    }
    EXPECT_NEAR(ours, theirs, 1e-9 + 1e-6 * theirs);
    // Ridge splits the shared weight evenly among identical columns.
    EXPECT_NEAR(m.weights[4], m.weights[5], 1e-6);
    EXPECT_NEAR(m.weights[4] + m.weights[5] + m.weights[9], 1.5, 1e-3);
  }
}

TEST(FitOls, SingularWithoutRidgeIsNumericalError) {
  std::vector<FeatureVector> rows(10, FeatureVector{});
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i][0] = static_cast<double>(i);
  const std::vector<double> y = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  try {
    fit_ols(rows, y, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numerical);
  }
}

TEST(FitOls, ArgumentErrors) {
  std::vector<FeatureVector> rows(3, FeatureVector{});
  const std::vector<double> y = {1, 2};
  try {
    fit_ols(rows, y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::argument);
  }
  const std::vector<double> y3 = {1, 2, 3};
  try {
    fit_ols(rows, y3, -1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::argument);
  }
}

TEST(PredictLinear, Examples) {
  LinearModel m;
  m.intercept = 5.0;
  EXPECT_EQ(predict_linear(m, std::vector<double>(12, 3.0)), 5.0);
  m = {};
  m.weights[0] = 1.0;
  std::vector<double> x(12, 0.0);
  x[0] = 3.0;
  EXPECT_EQ(predict_linear(m, x), 3.0);
  m = {};
  m.weights[0] = m.weights[1] = 1.0;
  m.intercept = 1.0;
  x[0] = 2.0;
  x[1] = 3.0;
  EXPECT_EQ(predict_linear(m, x), 6.0);
}

TEST(PredictLinear, WrongDimension) {
  try {
    predict_linear(LinearModel{}, std::vector<double>(11, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
}

}  // namespace
}  // namespace pvedge
