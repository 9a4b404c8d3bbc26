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

#include "pvedge/linear.hpp"

#include <array>
#include <cmath>
#include <optional>

#include <fmt/core.h>

namespace pvedge {
namespace {

constexpr std::size_t kDim = kFeatureCount;
using Gram = std::array<std::array<double, kDim>, kDim>;

// In-place lower Cholesky factor. A pivot at or below min_pivot means the
// matrix is treated as singular.
bool cholesky(Gram& a, double min_pivot) {
  for (std::size_t j = 0; j < kDim; ++j) {
    double d = a[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
    if (!(d > min_pivot) || !std::isfinite(d)) return false;
    a[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < kDim; ++i) {
      double s = a[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
      a[i][j] = s / a[j][j];
    }
  }
  return true;
}

FeatureVector cholesky_solve(const Gram& l, FeatureVector b) {
  for (std::size_t i = 0; i < kDim; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= l[i][k] * b[k];
    b[i] /= l[i][i];
  }
  for (std::size_t i = kDim; i-- > 0;) {
    for (std::size_t k = i + 1; k < kDim; ++k) b[i] -= l[k][i] * b[k];
    b[i] /= l[i][i];
  }
  return b;
}

}  // namespace

LinearModel fit_ols(const std::vector<FeatureVector>& features, std::span<const double> labels, double ridge_eps) {
  const std::size_t n = features.size();
  if (n == 0) throw Error(ErrorKind::empty_dataset, "fit_ols needs at least one sample");
  if (labels.size() != n)
    throw Error(ErrorKind::argument, fmt::format("{} labels for {} feature rows", labels.size(), n));
  if (!(ridge_eps >= 0.0) || !std::isfinite(ridge_eps))
    throw Error(ErrorKind::argument, fmt::format("ridge_eps must be >= 0, got {}", ridge_eps));

  FeatureVector x_mean{};
  double y_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double inv = 1.0 / static_cast<double>(i + 1);
    for (std::size_t c = 0; c < kDim; ++c) x_mean[c] += (features[i][c] - x_mean[c]) * inv;
    y_mean += (labels[i] - y_mean) * inv;
  }

  Gram gram{};
  FeatureVector rhs{};
  FeatureVector xc;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < kDim; ++c) xc[c] = features[i][c] - x_mean[c];
    const double yc = labels[i] - y_mean;
    for (std::size_t r = 0; r < kDim; ++r) {
      rhs[r] += xc[r] * yc;
      for (std::size_t c = 0; c <= r; ++c) gram[r][c] += xc[r] * xc[c];
    }
  }
  double max_diag = 0.0;
  for (std::size_t r = 0; r < kDim; ++r) {
    max_diag = std::max(max_diag, gram[r][r]);
    for (std::size_t c = r + 1; c < kDim; ++c) gram[r][c] = gram[c][r];
  }

  Gram factor = gram;
  if (!cholesky(factor, 1e-10 * max_diag)) {
    factor = gram;
    for (std::size_t r = 0; r < kDim; ++r) factor[r][r] += ridge_eps;
    if (!cholesky(factor, 0.0))
      throw Error(ErrorKind::numerical,
                  fmt::format("Gram matrix is singular even with ridge_eps = {}", ridge_eps));
  }

  LinearModel model;
  model.weights = cholesky_solve(factor, rhs);
  model.intercept = y_mean;
  for (std::size_t c = 0; c < kDim; ++c) model.intercept -= model.weights[c] * x_mean[c];
  for (double w : model.weights)
    if (!std::isfinite(w)) throw Error(ErrorKind::numerical, "non-finite OLS weight");
  if (!std::isfinite(model.intercept)) throw Error(ErrorKind::numerical, "non-finite OLS intercept");
  return model;
}

double predict_linear(const LinearModel& model, std::span<const double> x) {
  if (x.size() != kDim)
    throw Error(ErrorKind::dimension, fmt::format("Input data must contain exactly {} elements (got {}).", kDim, x.size()));
  double acc = model.intercept;
  for (std::size_t c = 0; c < kDim; ++c) acc += model.weights[c] * x[c];
  return acc;
}

}  // namespace pvedge
