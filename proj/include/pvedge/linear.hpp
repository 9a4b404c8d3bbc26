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

// Ordinary least squares baseline.

#pragma once

#include <span>
#include <vector>

#include "pvedge/dataset.hpp"

namespace pvedge {

struct LinearModel {
  FeatureVector weights{};
  double intercept = 0.0;
};

inline constexpr double kDefaultRidgeEps = 1e-8;

// Normal equations on centered data, solved by Cholesky. A (near-)singular
// Gram matrix is retried once with ridge_eps on the diagonal; if that still
// fails, Error(numerical) is thrown.
LinearModel fit_ols(const std::vector<FeatureVector>& features, std::span<const double> labels,
                    double ridge_eps = kDefaultRidgeEps);

double predict_linear(const LinearModel& model, std::span<const double> x);

}  // namespace pvedge
