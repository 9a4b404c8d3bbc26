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

#include "pvedge/metrics.hpp"

#include <cmath>

#include <fmt/core.h>

#include "pvedge/common.hpp"

namespace pvedge {
namespace {

void check_pair(std::span<const double> a, std::span<const double> b, std::size_t min_n) {
  if (a.size() != b.size())
    throw Error(ErrorKind::argument, fmt::format("length mismatch: {} vs {}", a.size(), b.size()));
  if (a.size() < min_n) throw Error(ErrorKind::argument, fmt::format("need at least {} samples", min_n));
}

void check_capacity(double cap) {
  if (!(cap > 0.0) || !std::isfinite(cap))
    throw Error(ErrorKind::argument, fmt::format("capacity must be positive, got {}", cap));
}

double sum_squared_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

double r_squared(std::span<const double> y, std::span<const double> yhat) {
  check_pair(y, yhat, 2);
  double mean = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) mean += (y[i] - mean) / static_cast<double>(i + 1);
  double ss_tot = 0.0;
  for (double v : y) ss_tot += (v - mean) * (v - mean);
  if (!(ss_tot > 0.0)) throw Error(ErrorKind::undefined_variance, "R^2 undefined: labels have zero variance");
  return 1.0 - sum_squared_diff(y, yhat) / ss_tot;
}

double rmse(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b, 1);
  return std::sqrt(sum_squared_diff(a, b) / static_cast<double>(a.size()));
}

double capacity_mape(std::span<const double> y, std::span<const double> yhat, double cap) {
  check_capacity(cap);
  return 100.0 * rmse(y, yhat) / cap;
}

double capacity_mape_literal(std::span<const double> y, std::span<const double> yhat, double cap) {
  check_capacity(cap);
  check_pair(y, yhat, 1);
  return (1.0 - std::sqrt(sum_squared_diff(y, yhat) / cap / static_cast<double>(y.size()))) * 100.0;
}

MetricReport evaluate(std::span<const double> y, std::span<const double> yhat, double cap, bool literal_mape) {
  MetricReport r;
  r.r_squared = r_squared(y, yhat);
  r.mape_pct = literal_mape ? capacity_mape_literal(y, yhat, cap) : capacity_mape(y, yhat, cap);
  r.rmse = rmse(y, yhat);
  r.n = y.size();
  return r;
}

std::string to_text(const MetricReport& r) {
  return fmt::format("r_squared = {:.6f}\nmape_pct = {:.4f}\nrmse = {:.6g}\nn = {}\n", r.r_squared, r.mape_pct, r.rmse,
                     r.n);
}

}  // namespace pvedge
