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
#include <span>
#include <string>

namespace pvedge {

// 1 - SS_res / SS_tot. Throws Error(undefined_variance) for constant y.
double r_squared(std::span<const double> y, std::span<const double> yhat);

// Capacity-normalized error in percent: 100 * rmse(y, yhat) / cap.
double capacity_mape(std::span<const double> y, std::span<const double> yhat, double cap);

// The capacity MAPE formula exactly as usually printed,
// (1 - sqrt(mean((y - yhat)^2 / cap))) * 100. Kept for comparison only; it is
// near 100 for an accurate model.
double capacity_mape_literal(std::span<const double> y, std::span<const double> yhat, double cap);

double rmse(std::span<const double> a, std::span<const double> b);

struct MetricReport {
  double r_squared = 0.0;
  double mape_pct = 0.0;
  double rmse = 0.0;
  std::size_t n = 0;
};

MetricReport evaluate(std::span<const double> y, std::span<const double> yhat, double cap, bool literal_mape = false);

// "key = value" lines.
std::string to_text(const MetricReport& report);

}  // namespace pvedge
