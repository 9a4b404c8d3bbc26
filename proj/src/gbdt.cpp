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

#include "pvedge/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>
#include <omp.h>

namespace pvedge {
namespace {

// Below this many (sample, feature) visits a node is scanned on one thread.
constexpr std::size_t kParallelScanThreshold = 4096;

struct NodeTotals {
  double g = 0.0;
  double h = 0.0;
};

NodeTotals sum_grads(std::span<const std::size_t> idx, std::span<const GradPair> grads) {
  NodeTotals t;
  for (std::size_t i : idx) {
    t.g += grads[i].g;
    t.h += grads[i].h;
  }
  return t;
}

// Scans one feature whose node samples are already sorted by value. Keeps the
// first strictly-better candidate, so equal gains resolve to the lower
// threshold.
std::optional<SplitCandidate> scan_sorted_feature(std::size_t feature, std::span<const std::size_t> sorted,
                                                  std::span<const double> column, std::span<const GradPair> grads,
                                                  NodeTotals total, const Hyperparams& params) {
  std::optional<SplitCandidate> best;
  double g_left = 0.0;
  double h_left = 0.0;
  for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
    g_left += grads[sorted[k]].g;
    h_left += grads[sorted[k]].h;
    const double lo = column[sorted[k]];
    const double hi = column[sorted[k + 1]];
    if (!(lo < hi)) continue;
    const double h_right = total.h - h_left;
    if (h_left < params.min_child_weight || h_right < params.min_child_weight) continue;
    const double gain = split_gain(g_left, h_left, total.g - g_left, h_right, params.lambda, params.gamma);
    if (!(gain > 0.0)) continue;
    if (best && !(gain > best->gain)) continue;
    double threshold = (lo + hi) / 2.0;
    if (!std::isfinite(threshold)) threshold = lo / 2.0 + hi / 2.0;
    if (!(threshold < hi)) threshold = lo;  // adjacent doubles
    best = SplitCandidate{feature, threshold, gain};
  }
  return best;
}

std::optional<SplitCandidate> reduce_candidates(const std::vector<std::optional<SplitCandidate>>& per_feature) {
  std::optional<SplitCandidate> best;
  for (const auto& c : per_feature) {
    if (c && (!best || c->gain > best->gain)) best = c;
  }
  return best;
}

// Node samples kept sorted by every feature; children inherit sorted order
// through a stable partition, so each column is sorted once per tree.
struct SortedNode {
  std::vector<std::vector<std::size_t>> by_feature;
};

SortedNode presort(std::span<const std::size_t> idx, const ColumnMatrix& x) {
  SortedNode node;
  node.by_feature.resize(x.cols());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    auto& order = node.by_feature[f];
    order.assign(idx.begin(), idx.end());
    const auto col = x.column(f);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return col[a] < col[b] || (col[a] == col[b] && a < b);
    });
  }
  return node;
}

std::optional<SplitCandidate> best_split_parallel(const SortedNode& node, const ColumnMatrix& x,
                                                  std::span<const GradPair> grads, NodeTotals total,
                                                  const Hyperparams& params) {
  const auto n_features = static_cast<int>(x.cols());
  std::vector<std::optional<SplitCandidate>> per_feature(x.cols());
  const std::size_t work = node.by_feature.empty() ? 0 : node.by_feature[0].size() * x.cols();
#pragma omp parallel for schedule(dynamic, 1) if (work >= kParallelScanThreshold)
  for (int f = 0; f < n_features; ++f) {
    const auto uf = static_cast<std::size_t>(f);
    per_feature[uf] = scan_sorted_feature(uf, node.by_feature[uf], x.column(uf), grads, total, params);
  }
  return reduce_candidates(per_feature);
}

std::optional<SplitCandidate> best_split_serial(const SortedNode& node, const ColumnMatrix& x,
                                                std::span<const GradPair> grads, NodeTotals total,
                                                const Hyperparams& params) {
  std::vector<std::optional<SplitCandidate>> per_feature(x.cols());
  for (std::size_t f = 0; f < x.cols(); ++f)
    per_feature[f] = scan_sorted_feature(f, node.by_feature[f], x.column(f), grads, total, params);
  return reduce_candidates(per_feature);
}

class TreeGrower {
 public:
  TreeGrower(const ColumnMatrix& x, std::span<const GradPair> grads, const Hyperparams& params)
      : x_(x), grads_(grads), params_(params), goes_left_(x.rows(), 0) {}

  RegressionTree grow(SortedNode root) {
    tree_.nodes.clear();
    tree_.leaf_count = 0;
    grow_node(std::move(root), 0);
    return std::move(tree_);
  }

 private:
  std::size_t make_leaf(NodeTotals total) {
    tree_.nodes.emplace_back(Leaf{params_.learning_rate * leaf_weight(total.g, total.h, params_.lambda)});
    ++tree_.leaf_count;
    return tree_.nodes.size() - 1;
  }

  std::size_t grow_node(SortedNode node, unsigned depth) {
    const auto& any_order = node.by_feature.front();
    const NodeTotals total = sum_grads(any_order, grads_);
    if (depth >= params_.max_depth || any_order.size() < 2) return make_leaf(total);
    const auto split = best_split_parallel(node, x_, grads_, total, params_);
    if (!split) return make_leaf(total);

    const auto col = x_.column(split->feature);
    for (std::size_t i : any_order) goes_left_[i] = col[i] <= split->threshold ? 1 : 0;

    SortedNode left, right;
    left.by_feature.resize(x_.cols());
    right.by_feature.resize(x_.cols());
    const auto n_features = static_cast<int>(x_.cols());
#pragma omp parallel for schedule(static) if (any_order.size() * x_.cols() >= kParallelScanThreshold)
    for (int f = 0; f < n_features; ++f) {
      const auto uf = static_cast<std::size_t>(f);
      auto& l = left.by_feature[uf];
      auto& r = right.by_feature[uf];
      for (std::size_t i : node.by_feature[uf]) (goes_left_[i] ? l : r).push_back(i);
    }
    node = SortedNode{};

    const std::size_t self = tree_.nodes.size();
    tree_.nodes.emplace_back(Branch{split->feature, split->threshold, 0, 0});
    const std::size_t l = grow_node(std::move(left), depth + 1);
    const std::size_t r = grow_node(std::move(right), depth + 1);
    auto& b = std::get<Branch>(tree_.nodes[self]);
    b.left = l;
    b.right = r;
    return self;
  }

  const ColumnMatrix& x_;
  std::span<const GradPair> grads_;
  const Hyperparams& params_;
  std::vector<unsigned char> goes_left_;
  RegressionTree tree_;
};

void check_dimension(std::size_t got, std::size_t want) {
  if (got != want)
    throw Error(ErrorKind::dimension,
                fmt::format("Input data must contain exactly {} elements (got {}).", want, got));
}

void check_sample_indices(std::span<const std::size_t> idx, const ColumnMatrix& x, std::span<const GradPair> grads) {
  if (grads.size() != x.rows())
    throw Error(ErrorKind::argument,
                fmt::format("gradient count {} does not match row count {}", grads.size(), x.rows()));
  for (std::size_t i : idx)
    if (i >= x.rows()) throw Error(ErrorKind::argument, fmt::format("sample index {} out of range", i));
}

}  // namespace

void Hyperparams::validate() const {
  const auto bad = [](const std::string& what) { throw Error(ErrorKind::argument, what); };
  if (num_trees < 1) bad("num_trees must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0))
    bad(fmt::format("learning_rate must lie in (0,1], got {}", learning_rate));
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) bad(fmt::format("lambda must be >= 0, got {}", lambda));
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) bad(fmt::format("gamma must be >= 0, got {}", gamma));
  if (!(min_child_weight >= 0.0) || !std::isfinite(min_child_weight))
    bad(fmt::format("min_child_weight must be >= 0, got {}", min_child_weight));
}

RegressionTree RegressionTree::single_leaf(double weight) {
  RegressionTree t;
  t.nodes.emplace_back(Leaf{weight});
  t.leaf_count = 1;
  return t;
}

std::size_t RegressionTree::route(std::span<const double> x) const {
  std::size_t at = 0;
  while (const auto* b = std::get_if<Branch>(&nodes[at])) at = x[b->feature] <= b->threshold ? b->left : b->right;
  return at;
}

std::size_t RegressionTree::depth() const {
  std::size_t deepest = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [at, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (const auto* b = std::get_if<Branch>(&nodes[at])) {
      stack.emplace_back(b->left, d + 1);
      stack.emplace_back(b->right, d + 1);
    }
  }
  return deepest;
}

double RegressionTree::squared_weight_norm() const {
  double s = 0.0;
  for (const auto& n : nodes)
    if (const auto* l = std::get_if<Leaf>(&n)) s += l->weight * l->weight;
  return s;
}

std::vector<std::string> check_tree(const RegressionTree& tree, std::size_t feature_count) {
  std::vector<std::string> problems;
  if (tree.nodes.empty()) {
    problems.emplace_back("tree has no nodes");
    return problems;
  }
  std::vector<int> parents(tree.nodes.size(), 0);
  std::size_t leaves = 0;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (const auto* b = std::get_if<Branch>(&tree.nodes[i])) {
      if (b->feature >= feature_count)
        problems.push_back(fmt::format("node {}: feature {} >= feature count {}", i, b->feature, feature_count));
      if (!std::isfinite(b->threshold)) problems.push_back(fmt::format("node {}: non-finite threshold", i));
      for (std::size_t child : {b->left, b->right}) {
        if (child >= tree.nodes.size() || child == 0)
          problems.push_back(fmt::format("node {}: child {} out of range", i, child));
        else
          ++parents[child];
      }
    } else {
      ++leaves;
      if (!std::isfinite(std::get<Leaf>(tree.nodes[i]).weight))
        problems.push_back(fmt::format("node {}: non-finite leaf weight", i));
    }
  }
  for (std::size_t i = 1; i < tree.nodes.size(); ++i)
    if (parents[i] != 1) problems.push_back(fmt::format("node {}: has {} parents, expected 1", i, parents[i]));
  if (leaves != tree.leaf_count)
    problems.push_back(fmt::format("leaf_count {} does not match {} leaves", tree.leaf_count, leaves));
  // With one parent per non-root node and none for the root, the node graph is
  // a tree iff every node is reachable from the root.
  if (problems.empty()) {
    std::vector<char> seen(tree.nodes.size(), 0);
    std::vector<std::size_t> stack{0};
    std::size_t visited = 0;
    while (!stack.empty()) {
      const std::size_t at = stack.back();
      stack.pop_back();
      if (seen[at]) continue;
      seen[at] = 1;
      ++visited;
      if (const auto* b = std::get_if<Branch>(&tree.nodes[at])) {
        stack.push_back(b->left);
        stack.push_back(b->right);
      }
    }
    if (visited != tree.nodes.size())
      problems.push_back(fmt::format("{} nodes unreachable from the root (cycle)", tree.nodes.size() - visited));
  }
  return problems;
}

ColumnMatrix::ColumnMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

ColumnMatrix::ColumnMatrix(const std::vector<FeatureVector>& rows) : ColumnMatrix(rows.size(), kFeatureCount) {
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < kFeatureCount; ++c) at(r, c) = rows[r][c];
}

std::vector<double> ColumnMatrix::row(std::size_t r) const {
  std::vector<double> out(cols_);
  for (std::size_t c = 0; c < cols_; ++c) out[c] = at(r, c);
  return out;
}

std::vector<GradPair> compute_gradients(std::span<const double> labels, std::span<const double> predictions) {
  if (labels.size() != predictions.size())
    throw Error(ErrorKind::argument, fmt::format("labels ({}) and predictions ({}) differ in length",
                                                 labels.size(), predictions.size()));
  std::vector<GradPair> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!std::isfinite(labels[i]) || !std::isfinite(predictions[i]))
      throw Error(ErrorKind::argument, fmt::format("non-finite label or prediction at {}", i));
    out[i] = {predictions[i] - labels[i], 1.0};
  }
  return out;
}

double leaf_weight(double sum_g, double sum_h, double lambda) {
  const double denom = sum_h + lambda;
  if (!(denom > 0.0))
    throw Error(ErrorKind::degenerate_leaf, fmt::format("H + lambda = {} is not positive", denom));
  if (sum_g == 0.0) return 0.0;
  return -sum_g / denom;
}

double split_gain(double g_left, double h_left, double g_right, double h_right, double lambda, double gamma) {
  const double dl = h_left + lambda;
  const double dr = h_right + lambda;
  const double dp = h_left + h_right + lambda;
  if (!(dl > 0.0) || !(dr > 0.0) || !(dp > 0.0))
    throw Error(ErrorKind::degenerate_leaf, "split_gain with a non-positive denominator");
  const double g_parent = g_left + g_right;
  return 0.5 * (g_left * g_left / dl + g_right * g_right / dr - g_parent * g_parent / dp) - gamma;
}

std::optional<SplitCandidate> find_best_split(std::span<const std::size_t> sample_indices, const ColumnMatrix& features,
                                              std::span<const GradPair> grads, const Hyperparams& params) {
  check_sample_indices(sample_indices, features, grads);
  if (sample_indices.size() < 2) return std::nullopt;
  const SortedNode node = presort(sample_indices, features);
  return best_split_parallel(node, features, grads, sum_grads(sample_indices, grads), params);
}

std::optional<SplitCandidate> find_best_split_serial(std::span<const std::size_t> sample_indices,
                                                     const ColumnMatrix& features, std::span<const GradPair> grads,
                                                     const Hyperparams& params) {
  check_sample_indices(sample_indices, features, grads);
  if (sample_indices.size() < 2) return std::nullopt;
  const SortedNode node = presort(sample_indices, features);
  return best_split_serial(node, features, grads, sum_grads(sample_indices, grads), params);
}

RegressionTree build_tree(std::span<const std::size_t> sample_indices, const ColumnMatrix& features,
                          std::span<const GradPair> grads, const Hyperparams& params) {
  if (sample_indices.empty()) throw Error(ErrorKind::argument, "build_tree needs at least one sample");
  if (features.cols() == 0) throw Error(ErrorKind::argument, "build_tree needs at least one feature");
  check_sample_indices(sample_indices, features, grads);
  return TreeGrower(features, grads, params).grow(presort(sample_indices, features));
}

Ensemble train(const ColumnMatrix& features, std::span<const double> labels, Target target,
               const Hyperparams& params) {
  params.validate();
  const std::size_t n = features.rows();
  if (n == 0) throw Error(ErrorKind::empty_dataset, "training set is empty");
  if (labels.size() != n)
    throw Error(ErrorKind::argument, fmt::format("{} labels for {} feature rows", labels.size(), n));

  Ensemble model;
  model.feature_count = features.cols();
  model.target = target;
  // Running mean: exact when all labels are equal.
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += (labels[i] - mean) / static_cast<double>(i + 1);
  model.base_score = mean;

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const SortedNode root = presort(all, features);

  std::vector<double> preds(n, model.base_score);
  std::vector<double> row(features.cols());
  model.trees.reserve(params.num_trees);
  for (unsigned m = 0; m < params.num_trees; ++m) {
    const auto grads = compute_gradients(labels, preds);
    RegressionTree tree = TreeGrower(features, grads, params).grow(root);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < features.cols(); ++c) row[c] = features.at(i, c);
      preds[i] += tree.predict(row);
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

Ensemble train(const SplitDataset& data, Target target, const Hyperparams& params) {
  if (data.train.empty()) throw Error(ErrorKind::empty_dataset, "training set is empty");
  const ColumnMatrix x(feature_rows(data.train));
  const auto y = labels(data.train, target);
  return train(x, y, target, params);
}

double predict(const Ensemble& ensemble, std::span<const double> x) {
  check_dimension(x.size(), ensemble.feature_count);
  double acc = ensemble.base_score;
  for (const auto& tree : ensemble.trees) acc += tree.predict(x);
  return acc;
}

std::vector<double> predict_batch(const Ensemble& ensemble, const std::vector<FeatureVector>& rows) {
  check_dimension(kFeatureCount, ensemble.feature_count);
  std::vector<double> out(rows.size());
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& x = rows[static_cast<std::size_t>(i)];
    double acc = ensemble.base_score;
    for (const auto& tree : ensemble.trees) acc += tree.predict(x);
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

std::vector<double> predict_batch_serial(const Ensemble& ensemble, const std::vector<FeatureVector>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& x : rows) out.push_back(predict(ensemble, x));
  return out;
}

double objective_value(const Ensemble& ensemble, const std::vector<SampleRecord>& data, const Hyperparams& params) {
  if (data.empty()) throw Error(ErrorKind::empty_dataset, "objective_value needs data");
  double loss = 0.0;
  for (const auto& r : data) {
    const double diff = r.label(ensemble.target) - predict(ensemble, r.features);
    loss += 0.5 * diff * diff;
  }
  double penalty = 0.0;
  for (const auto& tree : ensemble.trees)
    penalty += params.gamma * static_cast<double>(tree.leaf_count) + 0.5 * params.lambda * tree.squared_weight_norm();
  return loss + penalty;
}

Ensemble truncated(const Ensemble& ensemble, std::size_t count) {
  Ensemble out = ensemble;
  out.trees.resize(std::min(count, ensemble.trees.size()));
  return out;
}

}  // namespace pvedge
