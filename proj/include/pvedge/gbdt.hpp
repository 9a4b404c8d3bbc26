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

// Gradient-boosted regression trees with the second-order objective
//
//   Obj = sum_i [g_i f(x_i) + 1/2 h_i f(x_i)^2] + gamma*T + 1/2*lambda*||w||^2
//
// and exact greedy split enumeration. The loss is 1/2 (y - yhat)^2, so
// g = yhat - y and h = 1, but everything below the gradient step is written
// against general (g, h) pairs.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "pvedge/common.hpp"
#include "pvedge/dataset.hpp"

namespace pvedge {

struct Hyperparams {
  unsigned num_trees = 100;
  unsigned max_depth = 6;
  double learning_rate = 0.3;  // folded into stored leaf weights
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
  std::uint64_t seed = 42;

  // Throws Error(argument) on the first violated bound.
  void validate() const;
};

struct GradPair {
  double g = 0.0;
  double h = 0.0;
};

struct Branch {
  std::size_t feature = 0;
  double threshold = 0.0;
  std::size_t left = 0;   // taken iff x[feature] <= threshold
  std::size_t right = 0;
  bool operator==(const Branch&) const = default;
};

struct Leaf {
  double weight = 0.0;
  bool operator==(const Leaf&) const = default;
};

using TreeNode = std::variant<Branch, Leaf>;

// Nodes live in a flat arena; index 0 is the root.
struct RegressionTree {
  std::vector<TreeNode> nodes;
  std::size_t leaf_count = 0;

  static RegressionTree single_leaf(double weight);

  // Index of the leaf node x is routed to.
  std::size_t route(std::span<const double> x) const;
  double predict(std::span<const double> x) const {
    return std::get<Leaf>(nodes[route(x)]).weight;
  }
  std::size_t depth() const;
  // Sum of squared leaf weights.
  double squared_weight_norm() const;

  bool operator==(const RegressionTree&) const = default;
};

// Structural problems of a tree (empty when well formed): reachability from
// the root, single parent per node, child bounds, feature bounds and the
// recorded leaf count.
std::vector<std::string> check_tree(const RegressionTree& tree, std::size_t feature_count);

struct Ensemble {
  double base_score = 0.0;
  std::vector<RegressionTree> trees;
  std::size_t feature_count = kFeatureCount;
  Target target = Target::active;

  bool operator==(const Ensemble&) const = default;
};

// Column-major feature storage; split search walks one column at a time.
class ColumnMatrix {
 public:
  ColumnMatrix() = default;
  ColumnMatrix(std::size_t rows, std::size_t cols);
  explicit ColumnMatrix(const std::vector<FeatureVector>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& at(std::size_t row, std::size_t col) { return data_[col * rows_ + row]; }
  double at(std::size_t row, std::size_t col) const { return data_[col * rows_ + row]; }
  std::span<const double> column(std::size_t col) const {
    return {data_.data() + col * rows_, rows_};
  }
  std::vector<double> row(std::size_t r) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::vector<GradPair> compute_gradients(std::span<const double> labels, std::span<const double> predictions);

double leaf_weight(double sum_g, double sum_h, double lambda);

double split_gain(double g_left, double h_left, double g_right, double h_right, double lambda, double gamma);

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
  bool operator==(const SplitCandidate&) const = default;
};

// Exact greedy search over midpoints of consecutive distinct values. Returns
// the maximal-gain candidate when its gain is positive and both children
// carry at least min_child_weight hessian mass. Ties go to the lower feature
// index, then the lower threshold. Features are searched in parallel; the
// result does not depend on the thread count.
std::optional<SplitCandidate> find_best_split(std::span<const std::size_t> sample_indices, const ColumnMatrix& features,
                                              std::span<const GradPair> grads, const Hyperparams& params);

// Single-threaded reference with the same contract.
std::optional<SplitCandidate> find_best_split_serial(std::span<const std::size_t> sample_indices,
                                                     const ColumnMatrix& features, std::span<const GradPair> grads,
                                                     const Hyperparams& params);

// Grows one tree; leaf weights are learning_rate * leaf_weight(G, H, lambda).
RegressionTree build_tree(std::span<const std::size_t> sample_indices, const ColumnMatrix& features,
                          std::span<const GradPair> grads, const Hyperparams& params);

Ensemble train(const ColumnMatrix& features, std::span<const double> labels, Target target, const Hyperparams& params);
Ensemble train(const SplitDataset& data, Target target, const Hyperparams& params);

// base_score plus the leaf weight of every tree, accumulated in tree order.
double predict(const Ensemble& ensemble, std::span<const double> x);

std::vector<double> predict_batch(const Ensemble& ensemble, const std::vector<FeatureVector>& rows);
std::vector<double> predict_batch_serial(const Ensemble& ensemble, const std::vector<FeatureVector>& rows);

// sum_i 1/2 (y_i - yhat_i)^2 + sum_k [gamma * T_k + 1/2 lambda * ||w_k||^2],
// with the stored (post-shrinkage) leaf weights as w.
double objective_value(const Ensemble& ensemble, const std::vector<SampleRecord>& data, const Hyperparams& params);

// First `count` trees of an ensemble, i.e. the model after `count` rounds.
Ensemble truncated(const Ensemble& ensemble, std::size_t count);

}  // namespace pvedge
